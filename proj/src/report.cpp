#include "d2e/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace d2e {

using nlohmann::ordered_json;

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";  // folds -0
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

CsvTable::CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

CsvTable& CsvTable::row(std::vector<std::string> cells) {
  if (cells.size() != columns_.size()) {
    throw std::invalid_argument("csv row has " + std::to_string(cells.size()) + " cells, expected " +
                                std::to_string(columns_.size()));
  }
  rows_.push_back(std::move(cells));
  return *this;
}

std::string CsvTable::str() const {
  auto line = [](const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    return out + '\n';
  };
  std::string out = line(columns_);
  for (const auto& r : rows_) out += line(r);
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

namespace {

std::string n(double v) { return format_number(v); }
std::string n(std::size_t v) { return std::to_string(v); }

// JSON cannot carry nan/inf; they become null.
ordered_json jnum(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

ordered_json epoch_json(const EpochRecord& r) {
  return ordered_json{{"epoch", r.epoch},
                      {"loss", jnum(r.loss)},
                      {"ce", jnum(r.ce)},
                      {"distill", jnum(r.distill)},
                      {"acc_dir_soft", jnum(r.acc_dir_soft)},
                      {"acc_dir_hard", jnum(r.acc_dir_hard)},
                      {"acc_evt_soft", jnum(r.acc_evt_soft)},
                      {"acc_evt_hard", jnum(r.acc_evt_hard)},
                      {"kl_mean", jnum(r.kl_mean)},
                      {"lr", jnum(r.lr)},
                      {"grad_norm", jnum(r.grad_norm)}};
}

}  // namespace

std::string train_log_csv(const TrainLog& log) {
  CsvTable t(kTrainLogColumns);
  for (const auto& r : log.records) {
    t.row({n(r.epoch), n(r.loss), n(r.ce), n(r.distill), n(r.acc_dir_soft), n(r.acc_dir_hard), n(r.acc_evt_soft),
           n(r.acc_evt_hard), n(r.kl_mean), n(r.lr)});
  }
  return t.str();
}

std::string train_log_json(const TrainLog& log) {
  ordered_json j;
  j["reference_acc_soft"] = jnum(log.reference_acc_soft);
  j["initial"] = log.initial ? epoch_json(*log.initial) : ordered_json(nullptr);
  j["records"] = ordered_json::array();
  for (const auto& r : log.records) j["records"].push_back(epoch_json(r));
  return j.dump(2) + "\n";
}

std::string bound_report_csv(const BoundReport& report) {
  CsvTable t(kBoundColumns);
  for (const auto& r : report.records) {
    t.row({n(r.epoch), n(r.kl_mean), n(r.tv_estimate), n(r.acc_gap), n(r.rhs), r.holds ? "true" : "false"});
  }
  return t.str();
}

std::string bound_report_json(const BoundReport& report) {
  ordered_json j;
  j["tv_mode"] = tv_mode_name(report.tv_mode);
  j["records"] = ordered_json::array();
  for (const auto& r : report.records) {
    j["records"].push_back(ordered_json{{"epoch", r.epoch},
                                        {"kl_mean", jnum(r.kl_mean)},
                                        {"tv_estimate", jnum(r.tv_estimate)},
                                        {"acc_gap", jnum(r.acc_gap)},
                                        {"rhs", jnum(r.rhs)},
                                        {"holds", r.holds}});
  }
  return j.dump(2) + "\n";
}

std::string energy_layers_csv(const EnergyReport& report, const std::vector<SopEntry>& layers) {
  CsvTable t(kEnergyLayerColumns);
  for (std::size_t i = 0; i < report.sops.size(); ++i) {
    // The first layer consumes the input code, so it has no spike-rate column.
    const std::string rd = i == 0 ? "" : n(report.rates_direct[i - 1]);
    const std::string re = i == 0 ? "" : n(report.rates_event[i - 1]);
    t.row({n(i < layers.size() ? layers[i].layer : i), i < layers.size() ? layers[i].kind : "", n(report.sops[i]), rd,
           re});
  }
  return t.str();
}

std::string energy_report_csv(const EnergyReport& report) {
  CsvTable t(kEnergyColumns);
  t.row({n(report.steps), n(report.e_mac), n(report.e_ac), n(report.e_direct), n(report.e_ttfs),
         n(report.first_layer_direct), n(report.first_layer_ttfs), n(report.savings_pct)});
  return t.str();
}

std::string energy_report_json(const EnergyReport& report, const std::vector<SopEntry>& layers) {
  ordered_json j;
  j["units"] = "joules per inference (constant-dependent)";
  j["steps"] = report.steps;
  j["e_mac"] = report.e_mac;
  j["e_ac"] = report.e_ac;
  j["layers"] = ordered_json::array();
  for (std::size_t i = 0; i < report.sops.size(); ++i) {
    ordered_json l{{"layer", i < layers.size() ? layers[i].layer : i},
                   {"kind", i < layers.size() ? layers[i].kind : ""},
                   {"sops", report.sops[i]}};
    l["rate_direct"] = i == 0 ? ordered_json(nullptr) : jnum(report.rates_direct[i - 1]);
    l["rate_event"] = i == 0 ? ordered_json(nullptr) : jnum(report.rates_event[i - 1]);
    j["layers"].push_back(l);
  }
  j["e_direct"] = jnum(report.e_direct);
  j["e_ttfs"] = jnum(report.e_ttfs);
  j["first_layer_direct"] = jnum(report.first_layer_direct);
  j["first_layer_ttfs"] = jnum(report.first_layer_ttfs);
  j["savings_pct"] = jnum(report.savings_pct);
  return j.dump(2) + "\n";
}

std::string cost_ledger_csv(const CostLedger& c) {
  CsvTable t(kCostColumns);
  t.row({cost_mode_name(c.mode), n(c.f_evt), n(c.f_dir), n(c.tsf_cost), n(c.skd_cost), n(c.total),
         n(c.overhead_pct)});
  return t.str();
}

std::string cost_ledger_json(const CostLedger& c) {
  ordered_json j{{"mode", cost_mode_name(c.mode)}, {"f_evt", c.f_evt},       {"f_dir", c.f_dir},
                 {"tsf_cost", c.tsf_cost},        {"skd_cost", c.skd_cost}, {"total", c.total},
                 {"overhead_pct", c.overhead_pct}};
  return j.dump(2) + "\n";
}

}  // namespace d2e
