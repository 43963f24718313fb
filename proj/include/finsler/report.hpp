#pragma once

// JSON encodings of specs, tensors, fits and experiments. Non-finite numbers
// are written as null.

#include <string>

#include "json.hpp"

#include "finsler/analysis.hpp"
#include "finsler/metric.hpp"
#include "finsler/transport.hpp"

namespace finsler {

inline constexpr const char* kToolName = "finsler";
inline constexpr const char* kToolVersion = "0.1.0";

using Json = nlohmann::ordered_json;

/// Throws SpecError describing the first offending key.
MetricSpec metric_spec_from_json(const Json& doc);
/// Reads and parses a metric-spec file; a missing or malformed file is a SpecError.
MetricSpec load_metric_spec(const std::string& path);
Json to_json(const MetricSpec& spec);

Json number(double v);
Json to_json(const TensorBlock& t);
Json to_json(const PointState& p);
/// Tensor norms and route residuals; full components when `full`.
Json to_json(const CurvatureBundle& b, bool full);
Json to_json(const ValidationReport& r);
Json to_json(const ClassificationVerdict& v);
Json to_json(const RelativeStretchFit& f);
Json to_json(const SemiCFit& f);
Json to_json(const BerwaldFrame2D& f);
Json to_json(const TheoremCheckResult& r);
Json to_json(const ParallelogramExperiment& e);
Json summary_json(const GeodesicSolution& g);
Json to_json(const Tolerances& t);

}  // namespace finsler
