#pragma once

// JSON and CSV renderings of estimation and simulation results. Numbers are
// written with round-trip precision so reruns compare byte-for-byte.

#include <exception>
#include <string>
#include <vector>

#include <json.hpp>

#include "thr/crossfit.hpp"
#include "thr/simulation.hpp"

namespace thr {

using Json = nlohmann::ordered_json;

Json to_json(const BoundsEstimate& b);
Json to_json(const Interval& i);
Json to_json(const IntervalSet& s);
Json to_json(const CellSummary& c);
Json to_json(const CrossfitOptions& o);
Json to_json(const CrossfitResult& r);
Json to_json(const MetricsRow& r);
Json to_json(const PopulationSummary& p);
Json to_json(const MonteCarloConfig& c);
Json to_json(const MonteCarloResult& r);
Json to_json(const std::vector<SweepPoint>& sweep);

/// {"error": {"kind": ..., "message": ..., ...}}
Json error_json(const std::exception& e);

/// One row per (method, estimator): Method, theta, Estimate, Bias, Width,
/// CovR, TMCR, CMCR, then interval coverage columns.
std::string metrics_csv(const MonteCarloResult& r);

/// One row per sigma with mean lower/upper per (method, estimator) and the
/// extended-interval band when available.
std::string sweep_csv(const std::vector<SweepPoint>& sweep);

/// Shortest decimal that round-trips.
std::string format_double(double v);

}  // namespace thr
