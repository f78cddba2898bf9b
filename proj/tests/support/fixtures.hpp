#pragma once

#include "pathfinder/attribute_index.hpp"

// Hand-shaped catalogs with known node ids.
namespace pftest {

// citations (numeric), topic (DB, ML, CV), year (numeric, tied to topic).
// Node 0 root; 1..3 = (-inf,4], (4,10], (10,inf); 4..9 split those at 1, 7, 15;
// 10..12 = hash leaves DB, ML, CV.
pathfinder::IndexCatalog citation_topic_catalog();

// a, b with b tracking a. Tree on a only: 1 = a <= 8, 2 = a > 8,
// leaves 3..6 = (-inf,4], (4,8], (8,12], (12,inf). b ranges of the leaves:
// [3,6], [5,8], [7,10], [10,13].
pathfinder::IndexCatalog borrowing_catalog();

// a, b uniform on [0,100). Trees on a (1 = a <= 50, 2 = a > 50) and on
// b (3 = b <= 50, 4 = b > 50).
pathfinder::IndexCatalog merge_catalog();

}  // namespace pftest
