#pragma once

// Text reports and the gain file.
//
// The gain file is line oriented, "key value..." per line, with the
// feedback matrix as N rows after "U_map N 3N". Floats use 17 significant
// digits so a write/read round trip is exact.

#include <parastab/controller.hpp>
#include <parastab/model.hpp>
#include <parastab/synthesis.hpp>

#include <iosfwd>
#include <optional>
#include <string>

namespace parastab {

std::string format_double(double v);

void write_assumption_report(std::ostream& os, const AssumptionReport& rep);

void write_certificate_report(std::ostream& os, const Certificate& cert,
                              const std::optional<ComparisonConstants>& constants = std::nullopt);

void write_search_log_csv(std::ostream& os, const std::vector<SearchEntry>& log);

void write_constructive_estimate(std::ostream& os, const ConstructiveEstimate& est);

struct GainFile {
  Certificate cert;  // P, alphas, gamma, rho, N, delta, l1, K0, margins
  MatrixXd U_map;
};

void write_gain_file(std::ostream& os, const Certificate& cert, const FeedbackGain& gain);
// Throws ConfigError naming the line on malformed input.
GainFile read_gain_file(std::istream& is);

// FeedbackGain carrying only what control() needs.
FeedbackGain gain_from_file(const GainFile& file);

}  // namespace parastab
