#pragma once

#include "csilab/config.hpp"
#include "csilab/dsp.hpp"
#include "csilab/errors.hpp"
#include "csilab/estimators.hpp"
#include "csilab/fft.hpp"
#include "csilab/parallel.hpp"
#include "csilab/report.hpp"
#include "csilab/rng.hpp"
#include "csilab/synth.hpp"
#include "csilab/theory.hpp"
#include "csilab/trace_file.hpp"
