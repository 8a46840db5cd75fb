#pragma once

#include "mdcs/autodiff.hpp"
#include "mdcs/checkpoint.hpp"
#include "mdcs/corpus_io.hpp"
#include "mdcs/cross_stitch.hpp"
#include "mdcs/data_synth.hpp"
#include "mdcs/experiment.hpp"
#include "mdcs/gradcheck.hpp"
#include "mdcs/heatmap.hpp"
#include "mdcs/image_io.hpp"
#include "mdcs/metrics.hpp"
#include "mdcs/network.hpp"
#include "mdcs/ops.hpp"
#include "mdcs/parallel.hpp"
#include "mdcs/pipeline.hpp"
#include "mdcs/seed.hpp"
#include "mdcs/spectral.hpp"
#include "mdcs/stats.hpp"
#include "mdcs/tensor.hpp"
#include "mdcs/training.hpp"
