#pragma once

#include "fptmc/analytic.hpp"
#include "fptmc/bridge.hpp"
#include "fptmc/calib.hpp"
#include "fptmc/kde.hpp"
#include "fptmc/mc.hpp"
#include "fptmc/model.hpp"
#include "fptmc/rng.hpp"
#include "fptmc/scenario.hpp"
#include "fptmc/sou.hpp"
#include "fptmc/special.hpp"
#include "fptmc/timeline.hpp"
