#pragma once

#include <robustnet/analysis.hpp>
#include <robustnet/changes.hpp>
#include <robustnet/error.hpp>
#include <robustnet/graph.hpp>
#include <robustnet/json_io.hpp>
#include <robustnet/network.hpp>
#include <robustnet/simulation.hpp>
#include <robustnet/spectral.hpp>
