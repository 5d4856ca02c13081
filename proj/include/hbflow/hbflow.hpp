#pragma once

#include "hbflow/errors.hpp"
#include "hbflow/core_tensor.hpp"
#include "hbflow/mesh.hpp"
#include "hbflow/quadrature.hpp"
#include "hbflow/space.hpp"
#include "hbflow/assembly.hpp"
#include "hbflow/linear_system.hpp"
#include "hbflow/inner_solver.hpp"
#include "hbflow/outer_fixed_point.hpp"
#include "hbflow/channel_oracle.hpp"
#include "hbflow/validation.hpp"
#include "hbflow/io.hpp"
#include "hbflow/config.hpp"
#include "hbflow/properties.hpp"
#include "hbflow/app.hpp"
