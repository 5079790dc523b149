#pragma once

#include <filesystem>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

#include "d2e/analysis.hpp"
#include "d2e/errors.hpp"
#include "d2e/transfer.hpp"

namespace d2e {

/// Shortest round-trip decimal form; identical bits give identical text.
std::string format_number(double v);

/// Minimal CSV table with a fixed header.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns);
  CsvTable& row(std::vector<std::string> cells);
  const std::vector<std::string>& columns() const noexcept { return columns_; }
  std::size_t rows() const noexcept { return rows_.size(); }
  std::string str() const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

/// Writes text atomically enough for a single process: parent dirs are created.
void write_text(const std::filesystem::path& path, const std::string& text);

// Frozen column orders.
inline const std::vector<std::string> kTrainLogColumns{"epoch",        "loss",         "ce",           "distill",
                                                       "acc_dir_soft", "acc_dir_hard", "acc_evt_soft", "acc_evt_hard",
                                                       "kl_mean",      "lr"};
inline const std::vector<std::string> kBoundColumns{"epoch", "kl_mean", "tv_estimate", "acc_gap", "rhs", "holds"};
inline const std::vector<std::string> kEnergyLayerColumns{"layer", "kind", "sops", "rate_direct", "rate_event"};
inline const std::vector<std::string> kEnergyColumns{"steps",    "e_mac",  "e_ac",
                                                     "e_direct", "e_ttfs", "first_layer_direct",
                                                     "first_layer_ttfs", "savings_pct"};
inline const std::vector<std::string> kCostColumns{"mode",     "f_evt", "f_dir",       "tsf_cost",
                                                   "skd_cost", "total", "overhead_pct"};

std::string train_log_csv(const TrainLog& log);
std::string train_log_json(const TrainLog& log);
std::string bound_report_csv(const BoundReport& report);
std::string bound_report_json(const BoundReport& report);
std::string energy_layers_csv(const EnergyReport& report, const std::vector<SopEntry>& layers);
std::string energy_report_csv(const EnergyReport& report);
std::string energy_report_json(const EnergyReport& report, const std::vector<SopEntry>& layers);
std::string cost_ledger_csv(const CostLedger& ledger);
std::string cost_ledger_json(const CostLedger& ledger);

}  // namespace d2e
