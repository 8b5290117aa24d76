#pragma once

#include "aggregation.hpp"
#include "charging_model.hpp"
#include "civil_time.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "experiment.hpp"
#include "optimizer.hpp"
#include "predictor.hpp"
#include "reports.hpp"
