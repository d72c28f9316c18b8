#pragma once

// Everything except the YAML front end (config.hpp, runner.hpp), which needs yaml-cpp.

#include "finsler/balls.hpp"
#include "finsler/builtins.hpp"
#include "finsler/geometry.hpp"
#include "finsler/identities.hpp"
#include "finsler/mesh.hpp"
#include "finsler/norms.hpp"
#include "finsler/pde.hpp"
#include "finsler/svg.hpp"
#include "finsler/verify.hpp"
