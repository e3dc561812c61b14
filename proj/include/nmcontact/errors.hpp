#ifndef NMCONTACT_ERRORS_HPP
#define NMCONTACT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace nmc {

// Bad user-facing configuration (boundary decomposition, parameter files).
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Degenerate geometry (zero-area triangles and the like).
struct geometry_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Mismatched vector/matrix sizes between coupled quantities.
struct dimension_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A tag or key that is not present where it was expected.
struct lookup_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The interior block is singular: the boundary decomposition leaves an
// unpinned rigid mode, so the problem is not reducible as posed.
struct semicoercivity_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace nmc

#endif  // NMCONTACT_ERRORS_HPP
