#pragma once

#include "mbmdr/assoc.hpp"
#include "mbmdr/auc.hpp"
#include "mbmdr/baseline.hpp"
#include "mbmdr/benchmark.hpp"
#include "mbmdr/classifier.hpp"
#include "mbmdr/dataset.hpp"
#include "mbmdr/engine.hpp"
#include "mbmdr/error.hpp"
#include "mbmdr/link.hpp"
#include "mbmdr/logistic.hpp"
#include "mbmdr/model_io.hpp"
#include "mbmdr/penetrance.hpp"
#include "mbmdr/random.hpp"
#include "mbmdr/simulate.hpp"
#include "mbmdr/stats.hpp"
#include "mbmdr/tuner.hpp"
