#pragma once

#include "thermoflat/extended_real.hpp"
#include "thermoflat/common.hpp"
#include "thermoflat/parallel.hpp"
#include "thermoflat/convex.hpp"
#include "thermoflat/measures.hpp"
#include "thermoflat/ruelle.hpp"
#include "thermoflat/model.hpp"
#include "thermoflat/optim.hpp"
#include "thermoflat/linearizer.hpp"
#include "thermoflat/transport.hpp"
#include "thermoflat/oracle.hpp"
