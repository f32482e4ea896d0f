#pragma once

#include "coorbit/analysis.hpp"
#include "coorbit/coorbit.hpp"
#include "coorbit/embed.hpp"
#include "coorbit/error.hpp"
#include "coorbit/group.hpp"
#include "coorbit/metric.hpp"
