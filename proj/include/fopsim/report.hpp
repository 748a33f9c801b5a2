#pragma once

#include <string>

#include "fopsim/experiment.hpp"

namespace fopsim {

// Writes <dir>/report.json, <dir>/slots.csv, <dir>/epochs.csv and policy
// checkpoints under <dir>/models/. Column order and float formatting are
// stable, so identical configs (and seeds) give byte-identical files.
void write_report(const std::string& dir, const RunReport& report);

std::string report_summary_json(const RunReport& report);

// Moving average with the 50-epoch window, recomputable from the CSV.
std::vector<double> moving_average(const std::vector<double>& rewards, int window = 50);

}  // namespace fopsim
