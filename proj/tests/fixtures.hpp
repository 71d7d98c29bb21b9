#pragma once

// Small hand-checked CSV fixtures for loading and cleaning.

#include <string>

namespace treetune::fixtures {

/// 10 rows; the response is missing in rows 3 and 7; features are dense.
inline const std::string kMissingResponse =
    "q,a,b\n"
    "1.5,1,10\n"
    "2.5,2,20\n"
    "NA,3,30\n"
    "4.5,4,40\n"
    "5.5,5,50\n"
    "6.5,6,60\n"
    ",7,70\n"
    "8.5,8,80\n"
    "9.5,9,90\n"
    "10.5,10,100\n";

/// 10 rows, dense response; feature missingness a = 0%, b = 20%, c = 60%.
inline const std::string kColumnMissingness =
    "q,a,b,c\n"
    "1,1,5,NA\n"
    "2,2,NA,2\n"
    "3,3,4,NA\n"
    "4,4,3,NaN\n"
    "5,5,NA,4\n"
    "6,6,1,NA\n"
    "7,7,2,\n"
    "8,8,8,8\n"
    "9,9,9,na\n"
    "10,10,7,6\n";

/// 10 rows; feature b has exactly one missing cell (10%).
inline const std::string kTenPercent =
    "q,a,b\n"
    "1,1,1\n"
    "2,2,2\n"
    "3,3,NA\n"
    "4,4,4\n"
    "5,5,5\n"
    "6,6,6\n"
    "7,7,7\n"
    "8,8,8\n"
    "9,9,9\n"
    "10,10,10\n";

/// 10 rows; feature b is 30% missing.
inline const std::string kThirtyPercent =
    "q,a,b\n"
    "1,1,1\n"
    "2,2,NA\n"
    "3,3,3\n"
    "4,4,NA\n"
    "5,5,5\n"
    "6,6,NA\n"
    "7,7,7\n"
    "8,8,8\n"
    "9,9,9\n"
    "10,10,10\n";

/// Feature a is [1, missing, 3, 5] once the missing-response row is gone;
/// that row's a = 100 must not enter the median.
inline const std::string kMedian =
    "q,a\n"
    "1,1\n"
    "2,NA\n"
    "NA,100\n"
    "3,3\n"
    "4,5\n";

}  // namespace treetune::fixtures
