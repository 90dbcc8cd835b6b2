#pragma once

#include "clustering.hpp"
#include "data_model.hpp"
#include "distances.hpp"
#include "error.hpp"
#include "evaluation.hpp"
#include "imputation.hpp"
#include "robot_sim.hpp"
#include "synthetic.hpp"
#include "time.hpp"
