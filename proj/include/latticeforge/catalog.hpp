#pragma once

#include "latticeforge/core.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace latticeforge::catalog {

/// Entry names in fixed order.
const std::vector<std::string>& list();

bool contains(std::string_view name);

/// Builds the named cell in the unit frame [0,1]^3. Boundary struts are listed
/// in full; the homogenizer accounts for sharing between neighbouring cells.
UnitCell make(std::string_view name);

}  // namespace latticeforge::catalog
