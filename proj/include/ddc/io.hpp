#pragma once

/// @file io.hpp
/// @brief CSV and JSON persistence for datasets, results and trajectories.

#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ddc/simulate.hpp"

namespace ddc::io {

namespace fs = std::filesystem;

inline nlohmann::json MatrixToJson(const MatrixXd& A) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    std::vector<double> r(A.cols());
    for (Eigen::Index j = 0; j < A.cols(); ++j) r[j] = A(i, j);
    rows.push_back(r);
  }
  return rows;
}

inline MatrixXd MatrixFromJson(const nlohmann::json& j) {
  if (j.is_number()) return MatrixXd::Constant(1, 1, j.get<double>());
  if (!j.is_array()) throw std::invalid_argument("matrix must be a JSON array of rows");
  if (j.empty()) return MatrixXd(0, 0);
  if (j.front().is_number()) {  // a flat list is read as a column
    MatrixXd v(j.size(), 1);
    for (std::size_t i = 0; i < j.size(); ++i) v(i, 0) = j[i].get<double>();
    return v;
  }
  const std::size_t cols = j.front().size();
  MatrixXd A(j.size(), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i].size() != cols) throw std::invalid_argument("ragged matrix rows in JSON");
    for (std::size_t k = 0; k < cols; ++k) A(i, k) = j[i][k].get<double>();
  }
  return A;
}

inline VectorXd VectorFromJson(const nlohmann::json& j) {
  const MatrixXd A = MatrixFromJson(j);
  if (A.cols() != 1 && A.rows() != 1) throw std::invalid_argument("expected a vector");
  return A.cols() == 1 ? VectorXd(A.col(0)) : VectorXd(A.row(0).transpose());
}

inline void WriteText(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

inline std::string ReadText(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Pretty JSON with sorted keys and shortest round-trip numbers, so equal
/// content gives equal bytes.
inline void WriteJson(const fs::path& path, const nlohmann::json& j) { WriteText(path, j.dump(2) + "\n"); }

inline nlohmann::json ReadJson(const fs::path& path) {
  try {
    return nlohmann::json::parse(ReadText(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

namespace internal {

inline std::string Num(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

inline std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

inline std::string Header(const std::string& prefix, int count) {
  std::string h;
  for (int i = 1; i <= count; ++i) h += "," + prefix + std::to_string(i);
  return h;
}

}  // namespace internal

/// Dataset as `t,x1..xn,u1..um,xdot1..xdotn` plus a JSON sidecar with the
/// provenance and the ground-truth disturbance samples.
inline void WriteDataset(const fs::path& csv, const ExperimentDataset& ds) {
  std::ostringstream out;
  out << "t" << internal::Header("x", ds.n()) << internal::Header("u", ds.m()) << internal::Header("xdot", ds.n())
      << "\n";
  for (int k = 0; k < ds.T(); ++k) {
    out << internal::Num(ds.t(k));
    for (int i = 0; i < ds.n(); ++i) out << "," << internal::Num(ds.X(i, k));
    for (int i = 0; i < ds.m(); ++i) out << "," << internal::Num(ds.U(i, k));
    for (int i = 0; i < ds.n(); ++i) out << "," << internal::Num(ds.Xdot(i, k));
    out << "\n";
  }
  WriteText(csv, out.str());
  nlohmann::json side = ds.provenance;
  side["plant"] = ds.plant;
  side["n"] = ds.n();
  side["m"] = ds.m();
  side["T"] = ds.T();
  side["ground_truth"]["d"] = MatrixToJson(ds.D);
  fs::path sidecar = csv;
  sidecar.replace_extension(".json");
  WriteJson(sidecar, side);
}

/// Reads a dataset CSV; the sidecar is optional and supplies n and m when
/// the header is ambiguous.
inline ExperimentDataset ReadDataset(const fs::path& csv) {
  std::ifstream in(csv);
  if (!in) throw std::runtime_error("cannot read " + csv.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(csv.string() + ": empty file");
  const auto head = internal::SplitCsv(line);
  int n = 0, m = 0, nd = 0;
  for (const auto& h : head) {
    if (h.rfind("xdot", 0) == 0)
      ++nd;
    else if (h.rfind("x", 0) == 0)
      ++n;
    else if (h.rfind("u", 0) == 0)
      ++m;
  }
  if (head.empty() || head[0] != "t" || n != nd || static_cast<int>(head.size()) != 1 + 2 * n + m)
    throw std::runtime_error(csv.string() + ":1: header must be t,x1..xn,u1..um,xdot1..xdotn");
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = internal::SplitCsv(line);
    if (cells.size() != head.size())
      throw std::runtime_error(csv.string() + ":" + std::to_string(lineno) + ": expected " +
                               std::to_string(head.size()) + " fields");
    std::vector<double> r;
    for (const auto& c : cells) {
      try {
        r.push_back(std::stod(c));
      } catch (const std::exception&) {
        throw std::runtime_error(csv.string() + ":" + std::to_string(lineno) + ": not a number: " + c);
      }
    }
    rows.push_back(std::move(r));
  }
  ExperimentDataset ds;
  const int T = static_cast<int>(rows.size());
  ds.t.resize(T);
  ds.X.resize(n, T);
  ds.U.resize(m, T);
  ds.Xdot.resize(n, T);
  for (int k = 0; k < T; ++k) {
    ds.t(k) = rows[k][0];
    for (int i = 0; i < n; ++i) ds.X(i, k) = rows[k][1 + i];
    for (int i = 0; i < m; ++i) ds.U(i, k) = rows[k][1 + n + i];
    for (int i = 0; i < n; ++i) ds.Xdot(i, k) = rows[k][1 + n + m + i];
  }
  fs::path sidecar = csv;
  sidecar.replace_extension(".json");
  if (fs::exists(sidecar)) {
    ds.provenance = ReadJson(sidecar);
    ds.plant = ds.provenance.value("plant", "");
    if (ds.provenance.contains("ground_truth") && ds.provenance["ground_truth"].contains("d"))
      ds.D = MatrixFromJson(ds.provenance["ground_truth"]["d"]);
    ds.provenance.erase("ground_truth");
  }
  return ds;
}

/// Trajectory as `t,x..,u..,xdot..` with `e1..ep` appended when C is given.
inline void WriteTrajectory(const fs::path& csv, const Trajectory& tr, const ClosedLoop& cl, const MatrixXd& C = {},
                            const VectorXd& r = {}) {
  const int n = static_cast<int>(tr.X.rows()), m = static_cast<int>(tr.U.rows()), p = static_cast<int>(C.rows());
  std::ostringstream out;
  out << "t" << internal::Header("x", n) << internal::Header("u", m) << internal::Header("xdot", n)
      << internal::Header("e", p) << "\n";
  for (int k = 0; k < tr.size(); ++k) {
    const VectorXd x = tr.X.col(k);
    const VectorXd xd = cl.rhs(tr.t[k], x);
    out << internal::Num(tr.t[k]);
    for (int i = 0; i < n; ++i) out << "," << internal::Num(x(i));
    for (int i = 0; i < m; ++i) out << "," << internal::Num(tr.U(i, k));
    for (int i = 0; i < n; ++i) out << "," << internal::Num(xd(i));
    if (p) {
      const VectorXd e = C * x.head(C.cols()) - r;
      for (int i = 0; i < p; ++i) out << "," << internal::Num(e(i));
    }
    out << "\n";
  }
  WriteText(csv, out.str());
}

/// FNV-1a of a byte string, printed as 16 hex digits.
inline std::string HashHex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << h;
  return ss.str();
}

}  // namespace ddc::io
