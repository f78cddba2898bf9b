#include "pathfinder/filter_parser.hpp"

#include <cctype>
#include <charconv>

#include "pathfinder/error.hpp"

namespace pathfinder {

namespace {

enum class Tok { kIdent, kNumber, kString, kLParen, kRParen, kComma, kLt, kLe, kGt, kGe, kEq, kAnd, kOr, kIn, kEnd };

struct Token {
  Tok kind = Tok::kEnd;
  std::string text;
  double number = 0.0;
  std::size_t pos = 0;
};

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i]))) return false;
  }
  return true;
}

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char ch = s[i];
    if (std::isspace(static_cast<unsigned char>(ch))) {
      ++i;
      continue;
    }
    Token t;
    t.pos = i;
    if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
      std::size_t j = i + 1;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_' || s[j] == '.')) ++j;
      t.text = std::string(s.substr(i, j - i));
      if (iequals(t.text, "and")) {
        t.kind = Tok::kAnd;
      } else if (iequals(t.text, "or")) {
        t.kind = Tok::kOr;
      } else if (iequals(t.text, "in")) {
        t.kind = Tok::kIn;
      } else {
        t.kind = Tok::kIdent;
      }
      i = j;
    } else if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '-' || ch == '+' || ch == '.') {
      std::size_t start = i;
      if (ch == '+') ++start;
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(s.data() + start, s.data() + s.size(), v);
      if (ec != std::errc() || ptr == s.data() + start) throw FilterError("malformed number", i);
      t.kind = Tok::kNumber;
      t.number = v;
      t.text = std::string(s.substr(i, static_cast<std::size_t>(ptr - s.data()) - i));
      i = static_cast<std::size_t>(ptr - s.data());
    } else if (ch == '"') {
      std::size_t j = i + 1;
      bool closed = false;
      while (j < s.size()) {
        if (s[j] == '\\') {
          if (j + 1 >= s.size()) break;
          t.text.push_back(s[j + 1]);
          j += 2;
        } else if (s[j] == '"') {
          closed = true;
          ++j;
          break;
        } else {
          t.text.push_back(s[j++]);
        }
      }
      if (!closed) throw FilterError("unterminated string", i);
      t.kind = Tok::kString;
      i = j;
    } else {
      switch (ch) {
        case '(':
          t.kind = Tok::kLParen;
          break;
        case ')':
          t.kind = Tok::kRParen;
          break;
        case ',':
          t.kind = Tok::kComma;
          break;
        case '=':
          t.kind = Tok::kEq;
          break;
        case '<':
          t.kind = Tok::kLt;
          if (i + 1 < s.size() && s[i + 1] == '=') {
            t.kind = Tok::kLe;
            ++i;
          }
          break;
        case '>':
          t.kind = Tok::kGt;
          if (i + 1 < s.size() && s[i + 1] == '=') {
            t.kind = Tok::kGe;
            ++i;
          }
          break;
        default:
          throw FilterError(std::string("unexpected character '") + ch + "'", i);
      }
      ++i;
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.pos = s.size();
  out.push_back(end);
  return out;
}

class Parser {
 public:
  Parser(std::vector<Token> tokens, const Schema& schema) : toks_(std::move(tokens)), schema_(schema) {}

  BoolExpr parse() {
    BoolExpr e = expr();
    if (peek().kind != Tok::kEnd) throw FilterError("unexpected trailing input", peek().pos);
    return e;
  }

 private:
  const Token& peek() const { return toks_[at_]; }
  const Token& next() { return toks_[at_++]; }
  bool accept(Tok kind) {
    if (peek().kind != kind) return false;
    ++at_;
    return true;
  }
  const Token& expect(Tok kind, const char* what) {
    if (peek().kind != kind) throw FilterError(std::string("expected ") + what, peek().pos);
    return next();
  }

  BoolExpr expr() {
    std::vector<BoolExpr> parts{term()};
    while (accept(Tok::kOr)) parts.push_back(term());
    return BoolExpr::any_of(std::move(parts));
  }

  BoolExpr term() {
    std::vector<BoolExpr> parts{factor()};
    while (accept(Tok::kAnd)) parts.push_back(factor());
    return BoolExpr::all_of(std::move(parts));
  }

  BoolExpr factor() {
    if (accept(Tok::kLParen)) {
      BoolExpr e = expr();
      expect(Tok::kRParen, "')'");
      return e;
    }
    return BoolExpr::atom(atom());
  }

  std::size_t column(const Token& ident, AttributeKind want) {
    auto col = schema_.find(ident.text);
    if (!col) throw FilterError("unknown attribute '" + ident.text + "'", ident.pos);
    if (schema_.at(*col).kind != want) {
      throw FilterError("attribute '" + ident.text + "' is " + std::string(to_string(schema_.at(*col).kind)) +
                            (want == AttributeKind::kNumeric ? "; range comparisons need a numeric attribute"
                                                             : "; membership tests need a categorical attribute"),
                        ident.pos);
    }
    return *col;
  }

  template <typename F>
  AtomicPredicate build(std::size_t pos, F&& make) {
    try {
      return make();
    } catch (const FilterError& e) {
      throw FilterError(e.what(), pos);
    }
  }

  AtomicPredicate atom() {
    const Token& first = peek();
    if (first.kind == Tok::kNumber) return chained_range();
    const Token& ident = expect(Tok::kIdent, "attribute name, number or '('");
    const Token& op = next();
    switch (op.kind) {
      case Tok::kIn: {
        const std::size_t col = column(ident, AttributeKind::kCategorical);
        expect(Tok::kLParen, "'(' after IN");
        std::set<std::string> values;
        values.insert(expect(Tok::kString, "quoted string").text);
        while (accept(Tok::kComma)) values.insert(expect(Tok::kString, "quoted string").text);
        expect(Tok::kRParen, "')'");
        return AtomicPredicate::in_set(col, std::move(values));
      }
      case Tok::kEq:
        if (peek().kind == Tok::kString) {
          const std::size_t col = column(ident, AttributeKind::kCategorical);
          return AtomicPredicate::in_set(col, {next().text});
        }
        [[fallthrough]];
      case Tok::kLt:
      case Tok::kLe:
      case Tok::kGt:
      case Tok::kGe: {
        const std::size_t col = column(ident, AttributeKind::kNumeric);
        const double v = expect(Tok::kNumber, "number").number;
        return build(ident.pos, [&] {
          switch (op.kind) {
            case Tok::kLt:
              return AtomicPredicate::at_most(col, v, false);
            case Tok::kLe:
              return AtomicPredicate::at_most(col, v, true);
            case Tok::kGt:
              return AtomicPredicate::at_least(col, v, false);
            case Tok::kGe:
              return AtomicPredicate::at_least(col, v, true);
            default:
              return AtomicPredicate::between(col, v, v);
          }
        });
      }
      default:
        throw FilterError("expected comparison operator or IN", op.pos);
    }
  }

  // number (<|<=) ident (<|<=) number
  AtomicPredicate chained_range() {
    const Token& lo = next();
    const Token& op1 = next();
    if (op1.kind != Tok::kLt && op1.kind != Tok::kLe) throw FilterError("expected '<' or '<='", op1.pos);
    const Token& ident = expect(Tok::kIdent, "attribute name");
    const std::size_t col = column(ident, AttributeKind::kNumeric);
    const Token& op2 = next();
    if (op2.kind != Tok::kLt && op2.kind != Tok::kLe) throw FilterError("expected '<' or '<='", op2.pos);
    const Token& hi = expect(Tok::kNumber, "number");
    return build(lo.pos, [&] {
      return AtomicPredicate::range(col, Bound{lo.number, op1.kind == Tok::kLe},
                                    Bound{hi.number, op2.kind == Tok::kLe});
    });
  }

  std::vector<Token> toks_;
  const Schema& schema_;
  std::size_t at_ = 0;
};

}  // namespace

BoolExpr parse_filter(std::string_view text, const Schema& schema) {
  return Parser(tokenize(text), schema).parse();
}

DnfPredicate parse_dnf(std::string_view text, const Schema& schema) {
  bool blank = true;
  for (char ch : text) blank = blank && std::isspace(static_cast<unsigned char>(ch));
  if (blank) return DnfPredicate::always_true();
  return to_dnf(parse_filter(text, schema));
}

}  // namespace pathfinder
