// PF2D field snapshot format.
//
//   PF2D 1
//   nx=<int>
//   ny=<int>
//   hx=<decimal>
//   hy=<decimal>
//   ox=<decimal>
//   oy=<decimal>
//   bc=<neumann|periodic|dirichlet1>
//   data
//   nx*ny little-endian IEEE-754 doubles, row-major (y-major, x-minor)
//
// An optional single `# ...` comment line directly after the magic is
// accepted by the reader; the solver cache uses it to carry its key.
#pragma once
#include "pf/grid.hpp"

#include <string>

namespace pf {

struct FieldIoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void write_field(const ScalarField2D& u, const std::string& path,
                 const std::string& comment = "");
ScalarField2D read_field(const std::string& path, std::string* comment = nullptr);

} // namespace pf
