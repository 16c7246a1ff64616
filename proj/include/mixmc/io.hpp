// Apache License, Version 2.0, refer to LICENSE.txt

// File formats shared by the command-line stages.
//
//   model        {"categories": [...], "K": k, "p": [...],
//                 "clusters": [{"f": [...], "T": [[...], ...]}, ...]}
//   sequences    line 1: {"categories": [...]}
//                then one {"user", "city", "week": "YYYY-Www", "states": [...]} per line
//   labels       one cluster index per line
//   posteriors   CSV, header g0,...,g{K-1}, one row per sequence in file order
//   trace        CSV, header iter,loglik,delta
//
// Doubles are written in shortest round-trip form, so reading a file back
// recovers every value bit for bit.

#pragma once

#include <istream>
#include "json.hpp"
#include <ostream>
#include <vector>

#include "mixmc/analysis.hpp"
#include "mixmc/em.hpp"
#include "mixmc/model.hpp"

namespace mixmc::io {

using nlohmann::json;

json model_to_json(const MixtureModel& model);
/// Throws ParseError on a structural problem, InvalidInput on invalid parameters.
MixtureModel model_from_json(const json& doc);

void write_model(std::ostream& out, const MixtureModel& model);
MixtureModel read_model(std::istream& in);

void write_sequences(std::ostream& out, const SequenceDataset& data);
SequenceDataset read_sequences(std::istream& in);

void write_labels(std::ostream& out, const std::vector<std::size_t>& labels);
std::vector<std::size_t> read_labels(std::istream& in);

void write_posteriors(std::ostream& out, const PosteriorMatrix& posteriors);
PosteriorMatrix read_posteriors(std::istream& in);

void write_trace(std::ostream& out, const FitResult& fit);

json report_to_json(const ClusterReport& report);

/// Shortest decimal string that parses back to exactly x.
std::string format_double(double x);

}  // namespace mixmc::io
