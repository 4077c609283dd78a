#pragma once

#include "autoencoder.hpp"
#include "bicop.hpp"
#include "csv.hpp"
#include "datasets.hpp"
#include "error.hpp"
#include "marginals.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "pipeline.hpp"
#include "serialize.hpp"
#include "stats.hpp"
#include "vine.hpp"
