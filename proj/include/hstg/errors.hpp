#pragma once

#include <stdexcept>
#include <string>

namespace hstg {

// Error families map to CLI exit codes: usage/config -> 2, data/format -> 3,
// numeric failure -> 4.
struct UsageError : std::runtime_error { using std::runtime_error::runtime_error; };
struct InvalidConfig : std::runtime_error { using std::runtime_error::runtime_error; };
struct InvalidK : std::runtime_error { using std::runtime_error::runtime_error; };

struct IoError : std::runtime_error { using std::runtime_error::runtime_error; };
struct FormatError : std::runtime_error { using std::runtime_error::runtime_error; };
struct DegeneratePose : std::runtime_error { using std::runtime_error::runtime_error; };
struct EmptyFrame : std::runtime_error { using std::runtime_error::runtime_error; };
struct EmptyClip : std::runtime_error { using std::runtime_error::runtime_error; };
struct EmptyDataset : std::runtime_error { using std::runtime_error::runtime_error; };
struct EmptyGroup : std::runtime_error { using std::runtime_error::runtime_error; };
struct SingleClass : std::runtime_error { using std::runtime_error::runtime_error; };
struct NoCoverage : std::runtime_error { using std::runtime_error::runtime_error; };

struct ShapeMismatch : std::runtime_error { using std::runtime_error::runtime_error; };
struct NumericError : std::runtime_error { using std::runtime_error::runtime_error; };

}  // namespace hstg
