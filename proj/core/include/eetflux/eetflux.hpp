#pragma once

#include "eetflux/config.hpp"
#include "eetflux/currents.hpp"
#include "eetflux/generators.hpp"
#include "eetflux/hash.hpp"
#include "eetflux/model.hpp"
#include "eetflux/pathways.hpp"
#include "eetflux/propagator.hpp"
#include "eetflux/trajectory_io.hpp"
