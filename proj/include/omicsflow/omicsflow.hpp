#ifndef OMICSFLOW_OMICSFLOW_HPP
#define OMICSFLOW_OMICSFLOW_HPP

#include "dataio.hpp"
#include "eval.hpp"
#include "models/model.hpp"
#include "normalize.hpp"
#include "pipeline.hpp"
#include "project.hpp"
#include "rpensemble.hpp"
#include "search.hpp"
#include "survival.hpp"
#include "synth.hpp"

#endif
