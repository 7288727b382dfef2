#pragma once

#include "sge/core.hpp"
#include "sge/energy.hpp"
#include "sge/graphcore.hpp"
#include "sge/io.hpp"
#include "sge/lbfgs.hpp"
#include "sge/metric.hpp"
#include "sge/parallel.hpp"
#include "sge/pipeline.hpp"
#include "sge/regularizer.hpp"
#include "sge/sfista.hpp"
#include "sge/spline.hpp"
#include "sge/svg.hpp"
#include "sge/varifold.hpp"
