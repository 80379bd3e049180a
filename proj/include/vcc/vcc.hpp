#pragma once

#include "vcc/checkpoint.hpp"
#include "vcc/classify.hpp"
#include "vcc/clustering.hpp"
#include "vcc/colorspace.hpp"
#include "vcc/frame.hpp"
#include "vcc/keyframes.hpp"
#include "vcc/layers.hpp"
#include "vcc/manifest.hpp"
#include "vcc/media.hpp"
#include "vcc/model.hpp"
#include "vcc/report.hpp"
#include "vcc/rng.hpp"
#include "vcc/scoring.hpp"
#include "vcc/synth.hpp"
#include "vcc/tensor.hpp"
#include "vcc/trainer.hpp"
