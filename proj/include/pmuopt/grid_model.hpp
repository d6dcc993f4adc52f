#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "pmuopt/errors.hpp"

namespace pmuopt {

// One in-service branch, endpoints as internal 0-based indices.
struct Branch {
  int from = 0;
  int to = 0;
  double resistance = 0.0;       // series r, per unit
  double reactance = 0.0;        // series x, per unit
  double charging = 0.0;         // total line charging susceptance, per unit
  double tap_ratio = 0.0;        // 0 means nominal (1.0)
};

struct BusShunt {
  double conductance_mw = 0.0;   // Gs at V = 1 p.u.
  double susceptance_mvar = 0.0; // Bs at V = 1 p.u.
};

// Parsed network: topology, susceptance matrix and profile data needed to
// build the state prior. Immutable after construction; safe to share.
struct GridModel {
  int n_buses = 0;
  double base_mva = 100.0;
  std::vector<Branch> branches;                  // status-1 rows only
  std::vector<int> bus_ids;                      // internal -> external id
  std::map<int, int> bus_index;                  // external id -> internal
  std::vector<double> load_mw;                   // Pd per bus
  std::vector<double> gen_mw;                    // sum of in-service Pg per bus
  std::vector<BusShunt> shunts;
  std::vector<std::vector<int>> adjacency;       // sorted unique neighbors
  Eigen::MatrixXd susceptance;                   // B = Im(Ybus), regularized if needed
  bool regularized = false;
  double regularization_delta = 0.0;

  int n_branches() const { return static_cast<int>(branches.size()); }

  int degree(int bus) const { return static_cast<int>(adjacency[bus].size()); }

  // Net real power injection in per unit: (Pg - Pd) * scale.
  Eigen::VectorXd injection_mean(double scale) const {
    Eigen::VectorXd u(n_buses);
    for (int k = 0; k < n_buses; ++k) u(k) = (gen_mw[k] - load_mw[k]) * scale;
    return u;
  }
};

// Bus-to-bus (unit diagonal) and branch-to-bus 0/1 incidence matrices.
struct IncidencePair {
  Eigen::MatrixXi bus_to_bus;     // N x N
  Eigen::MatrixXi branch_to_bus;  // N_B x N
  int n_branches = 0;
};

namespace detail {

struct RawTable {
  std::vector<std::vector<double>> rows;
  std::vector<int> line_numbers;
};

inline std::string strip_comment(const std::string& line) {
  auto pos = line.find('%');
  return pos == std::string::npos ? line : line.substr(0, pos);
}

// Extracts the numeric matrix literal assigned to `mpc.<name>`.
inline RawTable read_table(const std::string& text, const std::string& name) {
  const std::string key = "mpc." + name;
  std::size_t at = text.find(key);
  if (at == std::string::npos)
    throw ParseError("missing table '" + key + "'", 1);
  int line_no = 1 + static_cast<int>(std::count(text.begin(), text.begin() + at, '\n'));
  std::size_t open = text.find('[', at);
  std::size_t close = text.find(']', open);
  if (open == std::string::npos || close == std::string::npos)
    throw ParseError("unterminated table '" + key + "'", line_no);

  RawTable table;
  std::string body = text.substr(open + 1, close - open - 1);
  std::size_t start = 0;
  while (start <= body.size()) {
    std::size_t end = body.find('\n', start);
    std::string line = body.substr(start, end == std::string::npos ? std::string::npos : end - start);
    start = end == std::string::npos ? body.size() + 1 : end + 1;
    line = strip_comment(line);
    std::vector<double> row;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (std::isspace(static_cast<unsigned char>(line[i])) || line[i] == ';' || line[i] == ','))
        ++i;
      if (i >= line.size()) break;
      std::size_t consumed = 0;
      double value = 0.0;
      try {
        value = std::stod(line.substr(i), &consumed);
      } catch (const std::exception&) {
        throw ParseError("malformed number in table '" + name + "'", line_no);
      }
      row.push_back(value);
      i += consumed;
    }
    if (!row.empty()) {
      table.rows.push_back(std::move(row));
      table.line_numbers.push_back(line_no);
    }
    ++line_no;
  }
  return table;
}

inline double read_scalar(const std::string& text, const std::string& name) {
  const std::string key = "mpc." + name;
  std::size_t at = text.find(key);
  if (at == std::string::npos)
    throw ParseError("missing scalar '" + key + "'", 1);
  std::size_t eq = text.find('=', at);
  if (eq == std::string::npos)
    throw ParseError("malformed assignment for '" + key + "'", 1);
  try {
    return std::stod(text.substr(eq + 1));
  } catch (const std::exception&) {
    int line_no = 1 + static_cast<int>(std::count(text.begin(), text.begin() + at, '\n'));
    throw ParseError("malformed value for '" + key + "'", line_no);
  }
}

}  // namespace detail

// Assembles B = Im(Ybus): series admittance with tap-magnitude handling,
// line charging and bus shunts. Phase-shift angles are out of scope.
inline Eigen::MatrixXd assemble_susceptance(int n_buses,
                                            const std::vector<Branch>& branches,
                                            const std::vector<BusShunt>& shunts,
                                            double base_mva) {
  Eigen::MatrixXd b_mat = Eigen::MatrixXd::Zero(n_buses, n_buses);
  for (const Branch& br : branches) {
    const double denom = br.resistance * br.resistance + br.reactance * br.reactance;
    if (denom == 0.0)
      throw DataError("zero series impedance on branch " + std::to_string(br.from) +
                      "-" + std::to_string(br.to));
    const double b_series = -br.reactance / denom;  // Im(1 / (r + jx))
    const double tap = br.tap_ratio == 0.0 ? 1.0 : br.tap_ratio;
    b_mat(br.from, br.from) += (b_series + 0.5 * br.charging) / (tap * tap);
    b_mat(br.to, br.to) += b_series + 0.5 * br.charging;
    b_mat(br.from, br.to) += -b_series / tap;
    b_mat(br.to, br.from) += -b_series / tap;
  }
  for (int k = 0; k < n_buses; ++k)
    b_mat(k, k) += shunts[k].susceptance_mvar / base_mva;
  return b_mat;
}

// Recomputes the susceptance matrix of a parsed model (without the
// regularization shift).
inline Eigen::MatrixXd build_susceptance(const GridModel& model) {
  return assemble_susceptance(model.n_buses, model.branches, model.shunts, model.base_mva);
}

inline IncidencePair incidence_matrices(const GridModel& model) {
  IncidencePair pair;
  const int n = model.n_buses;
  const int nb = model.n_branches();
  pair.n_branches = nb;
  pair.bus_to_bus = Eigen::MatrixXi::Identity(n, n);
  pair.branch_to_bus = Eigen::MatrixXi::Zero(nb, n);
  for (int r = 0; r < nb; ++r) {
    const Branch& br = model.branches[r];
    pair.bus_to_bus(br.from, br.to) = 1;
    pair.bus_to_bus(br.to, br.from) = 1;
    pair.branch_to_bus(r, br.from) = 1;
    pair.branch_to_bus(r, br.to) = 1;
  }
  return pair;
}

// Parses a MATPOWER plain-text case. Keeps status-1 branches, maps bus ids
// to dense internal indices 0..N-1, assembles B and validates topology.
inline GridModel parse_case(const std::string& text) {
  GridModel model;
  model.base_mva = detail::read_scalar(text, "baseMVA");
  if (model.base_mva <= 0.0) throw ValidationError("baseMVA must be positive");

  detail::RawTable bus = detail::read_table(text, "bus");
  detail::RawTable branch = detail::read_table(text, "branch");

  model.n_buses = static_cast<int>(bus.rows.size());
  if (model.n_buses < 2) throw ValidationError("need at least two buses");
  model.bus_ids.resize(model.n_buses);
  model.load_mw.assign(model.n_buses, 0.0);
  model.gen_mw.assign(model.n_buses, 0.0);
  model.shunts.assign(model.n_buses, BusShunt{});
  for (int k = 0; k < model.n_buses; ++k) {
    const auto& row = bus.rows[k];
    if (row.size() < 6)
      throw ParseError("bus row needs at least 6 columns", bus.line_numbers[k]);
    const int ext = static_cast<int>(row[0]);
    if (model.bus_index.count(ext))
      throw ValidationError("duplicate bus id " + std::to_string(ext));
    model.bus_index[ext] = k;
    model.bus_ids[k] = ext;
    model.load_mw[k] = row[2];
    model.shunts[k] = BusShunt{row[4], row[5]};
  }

  // Generator table is optional; injections default to -Pd without it.
  if (text.find("mpc.gen") != std::string::npos) {
    detail::RawTable gen = detail::read_table(text, "gen");
    for (std::size_t g = 0; g < gen.rows.size(); ++g) {
      const auto& row = gen.rows[g];
      if (row.size() < 2)
        throw ParseError("gen row needs at least 2 columns", gen.line_numbers[g]);
      const int ext = static_cast<int>(row[0]);
      auto it = model.bus_index.find(ext);
      if (it == model.bus_index.end())
        throw ValidationError("generator references unknown bus " + std::to_string(ext));
      const bool in_service = row.size() < 8 || row[7] > 0.0;
      if (in_service) model.gen_mw[it->second] += row[1];
    }
  }

  for (std::size_t r = 0; r < branch.rows.size(); ++r) {
    const auto& row = branch.rows[r];
    if (row.size() < 4)
      throw ParseError("branch row needs at least 4 columns", branch.line_numbers[r]);
    const bool in_service = row.size() < 11 || row[10] > 0.0;
    if (!in_service) continue;
    auto from_it = model.bus_index.find(static_cast<int>(row[0]));
    auto to_it = model.bus_index.find(static_cast<int>(row[1]));
    if (from_it == model.bus_index.end() || to_it == model.bus_index.end())
      throw ValidationError("branch endpoints reference unknown bus (line " +
                            std::to_string(branch.line_numbers[r]) + ")");
    Branch br;
    br.from = from_it->second;
    br.to = to_it->second;
    if (br.from == br.to)
      throw ValidationError("self-loop branch at bus " + std::to_string(static_cast<int>(row[0])));
    br.resistance = row[2];
    br.reactance = row[3];
    br.charging = row.size() > 4 ? row[4] : 0.0;
    br.tap_ratio = row.size() > 8 ? row[8] : 0.0;
    model.branches.push_back(br);
  }

  // Connectivity check.
  model.adjacency.assign(model.n_buses, {});
  for (const Branch& br : model.branches) {
    model.adjacency[br.from].push_back(br.to);
    model.adjacency[br.to].push_back(br.from);
  }
  for (auto& nbrs : model.adjacency) {
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
  }
  std::vector<char> seen(model.n_buses, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int reached = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int v : model.adjacency[u])
      if (!seen[v]) {
        seen[v] = 1;
        ++reached;
        stack.push_back(v);
      }
  }
  if (reached != model.n_buses)
    throw TopologyError("grid is disconnected (" + std::to_string(model.n_buses - reached) +
                        " buses unreachable from bus " + std::to_string(model.bus_ids[0]) + ")");

  model.susceptance = assemble_susceptance(model.n_buses, model.branches,
                                           model.shunts, model.base_mva);
  // A shunt-free DC susceptance matrix is Laplacian-like and singular; a
  // small diagonal shift keeps the prior well defined. Flagged in reports.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigs(model.susceptance);
  const double largest = eigs.eigenvalues().cwiseAbs().maxCoeff();
  const double smallest = eigs.eigenvalues().cwiseAbs().minCoeff();
  if (smallest < 1e-8 * largest) {
    model.regularization_delta = 1e-6 * model.susceptance.cwiseAbs().maxCoeff();
    model.susceptance += model.regularization_delta *
                         Eigen::MatrixXd::Identity(model.n_buses, model.n_buses);
    model.regularized = true;
  }
  return model;
}

// ---- JSON snapshot ----
// Matrices round-trip bit-for-bit: values are emitted with shortest
// representation that reparses to the identical double.

inline nlohmann::json to_snapshot_json(const GridModel& model) {
  nlohmann::json j;
  j["n_buses"] = model.n_buses;
  j["base_mva"] = model.base_mva;
  nlohmann::json buses = nlohmann::json::array();
  for (int k = 0; k < model.n_buses; ++k) {
    buses.push_back({{"id", model.bus_ids[k]},
                     {"pd_mw", model.load_mw[k]},
                     {"pg_mw", model.gen_mw[k]},
                     {"gs_mw", model.shunts[k].conductance_mw},
                     {"bs_mvar", model.shunts[k].susceptance_mvar}});
  }
  j["buses"] = std::move(buses);
  nlohmann::json branches = nlohmann::json::array();
  for (const Branch& br : model.branches) {
    branches.push_back({{"from", model.bus_ids[br.from]},
                        {"to", model.bus_ids[br.to]},
                        {"r", br.resistance},
                        {"x", br.reactance},
                        {"b", br.charging},
                        {"tap", br.tap_ratio}});
  }
  j["branches"] = std::move(branches);
  std::vector<double> flat(model.susceptance.size());
  for (int r = 0; r < model.n_buses; ++r)
    for (int c = 0; c < model.n_buses; ++c)
      flat[static_cast<std::size_t>(r) * model.n_buses + c] = model.susceptance(r, c);
  j["susceptance_row_major"] = std::move(flat);
  j["regularized"] = model.regularized;
  j["regularization_delta"] = model.regularization_delta;
  return j;
}

inline GridModel from_snapshot_json(const nlohmann::json& j) {
  GridModel model;
  model.n_buses = j.at("n_buses").get<int>();
  model.base_mva = j.at("base_mva").get<double>();
  for (const auto& bus : j.at("buses")) {
    const int ext = bus.at("id").get<int>();
    const int internal = static_cast<int>(model.bus_ids.size());
    if (model.bus_index.count(ext))
      throw ValidationError("duplicate bus id " + std::to_string(ext));
    model.bus_ids.push_back(ext);
    model.bus_index[ext] = internal;
    model.load_mw.push_back(bus.at("pd_mw").get<double>());
    model.gen_mw.push_back(bus.at("pg_mw").get<double>());
    model.shunts.push_back(BusShunt{bus.at("gs_mw").get<double>(), bus.at("bs_mvar").get<double>()});
  }
  if (static_cast<int>(model.bus_ids.size()) != model.n_buses)
    throw ValidationError("snapshot bus count mismatch");
  for (const auto& br : j.at("branches")) {
    Branch b;
    b.from = model.bus_index.at(br.at("from").get<int>());
    b.to = model.bus_index.at(br.at("to").get<int>());
    b.resistance = br.at("r").get<double>();
    b.reactance = br.at("x").get<double>();
    b.charging = br.at("b").get<double>();
    b.tap_ratio = br.at("tap").get<double>();
    model.branches.push_back(b);
  }
  model.adjacency.assign(model.n_buses, {});
  for (const Branch& br : model.branches) {
    model.adjacency[br.from].push_back(br.to);
    model.adjacency[br.to].push_back(br.from);
  }
  for (auto& nbrs : model.adjacency) {
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
  }
  const auto& flat = j.at("susceptance_row_major");
  model.susceptance.resize(model.n_buses, model.n_buses);
  for (int r = 0; r < model.n_buses; ++r)
    for (int c = 0; c < model.n_buses; ++c)
      model.susceptance(r, c) =
          flat.at(static_cast<std::size_t>(r) * model.n_buses + c).get<double>();
  model.regularized = j.at("regularized").get<bool>();
  model.regularization_delta = j.at("regularization_delta").get<double>();
  return model;
}

}  // namespace pmuopt
