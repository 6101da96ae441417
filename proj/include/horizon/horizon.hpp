#pragma once

#include "horizon/errors.hpp"
#include "horizon/polynomial.hpp"
#include "horizon/vector_field.hpp"
#include "horizon/system.hpp"
#include "horizon/signal.hpp"
#include "horizon/endpoint.hpp"
#include "horizon/steering.hpp"
#include "horizon/lifting.hpp"
#include "horizon/geodesic.hpp"
