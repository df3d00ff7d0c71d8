#pragma once

// Umbrella header.

#include "sfv/analysis/bench.hpp"
#include "sfv/analysis/complexity.hpp"
#include "sfv/analysis/similarity.hpp"
#include "sfv/classify/metrics.hpp"
#include "sfv/classify/svm.hpp"
#include "sfv/core/error.hpp"
#include "sfv/core/parallel.hpp"
#include "sfv/core/random.hpp"
#include "sfv/core/types.hpp"
#include "sfv/encode/bow.hpp"
#include "sfv/encode/fisher.hpp"
#include "sfv/encode/normalize.hpp"
#include "sfv/io/descriptor_file.hpp"
#include "sfv/io/model_json.hpp"
#include "sfv/io/report.hpp"
#include "sfv/model/em.hpp"
#include "sfv/model/gmm.hpp"
#include "sfv/model/kmeans.hpp"
#include "sfv/model/pca.hpp"
#include "sfv/pool/gmp.hpp"
#include "sfv/pool/solvers.hpp"
#include "sfv/synth/datasets.hpp"

#define SFV_VERSION "0.1.0"
