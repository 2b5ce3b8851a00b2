#include "occlqg/cli/config.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "json_io.hpp"
#include "occlqg/chance.hpp"

namespace occlqg::cli {

ConfigError::ConfigError(std::string field, std::string message, std::string location)
    : std::runtime_error((location.empty() ? "" : location + ": ") +
                         (field.empty() ? "" : field + ": ") + message),
      field_(std::move(field)),
      message_(std::move(message)),
      location_(std::move(location)) {}

std::string_view to_string(ChanceMode mode) {
  return mode == ChanceMode::kGaussian ? "gaussian" : "markov";
}

namespace {

/// Location of a value in the document, both as JSON pointer (for position
/// lookup) and in dotted form (for messages).
struct Path {
  std::string pointer;
  std::string dotted;

  Path operator/(const std::string& key) const {
    return {pointer + "/" + key, dotted.empty() ? key : dotted + "." + key};
  }
  Path operator[](std::size_t index) const {
    return {pointer + "/" + std::to_string(index), dotted + "[" + std::to_string(index) + "]"};
  }
};

class Reader {
 public:
  Reader(std::string_view text, std::string_view source)
      : positions_(value_positions(text)), source_(source) {}

  [[noreturn]] void fail(const Path& at, const std::string& message) const {
    std::string location(source_);
    // Fall back to the closest enclosing value that has a position.
    std::string ptr = at.pointer;
    for (;;) {
      if (auto it = positions_.find(ptr); it != positions_.end()) {
        location += ":" + std::to_string(it->second.first) + ":" +
                    std::to_string(it->second.second);
        break;
      }
      const auto slash = ptr.rfind('/');
      if (slash == std::string::npos) break;
      ptr.resize(slash);
    }
    throw ConfigError(at.dotted, message, location);
  }

  void check_keys(const Json& obj, const Path& at, std::initializer_list<const char*> allowed) const {
    if (!obj.is_object()) fail(at, "expected an object");
    const std::set<std::string> names(allowed.begin(), allowed.end());
    for (const auto& [key, value] : obj.items()) {
      if (!names.count(key)) fail(at / key, "unknown field");
    }
  }

  const Json& required(const Json& obj, const Path& at, const std::string& key) const {
    if (!obj.contains(key)) fail(at, "missing field '" + key + "'");
    return obj.at(key);
  }

  double number(const Json& j, const Path& at) const {
    if (!j.is_number()) fail(at, "expected a number");
    return j.get<double>();
  }

  Vector vector(const Json& j, const Path& at, Eigen::Index expected) const {
    if (!j.is_array()) fail(at, "expected an array of numbers");
    if (expected >= 0 && static_cast<Eigen::Index>(j.size()) != expected) {
      fail(at, "expected " + std::to_string(expected) + " entries, found " +
                   std::to_string(j.size()));
    }
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], at[i]);
    return v;
  }

  /// Row-major nested arrays; a bare number is accepted as a 1x1 matrix.
  Matrix matrix(const Json& j, const Path& at, Eigen::Index rows, Eigen::Index cols) const {
    Matrix M;
    if (j.is_number()) {
      M = Matrix::Constant(1, 1, j.get<double>());
    } else {
      if (!j.is_array()) fail(at, "expected a matrix (array of rows)");
      const auto r = static_cast<Eigen::Index>(j.size());
      Eigen::Index c = -1;
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_array()) fail(at[i], "expected a row (array of numbers)");
        if (c < 0) c = static_cast<Eigen::Index>(j[i].size());
        if (static_cast<Eigen::Index>(j[i].size()) != c) {
          fail(at[i], "expected " + std::to_string(c) + " entries like the first row, found " +
                          std::to_string(j[i].size()));
        }
      }
      M.resize(r, std::max<Eigen::Index>(c, 0));
      for (std::size_t i = 0; i < j.size(); ++i) {
        M.row(static_cast<Eigen::Index>(i)) = vector(j[i], at[i], M.cols()).transpose();
      }
    }
    if ((rows >= 0 && M.rows() != rows) || (cols >= 0 && M.cols() != cols)) {
      fail(at, "expected a " + std::to_string(rows >= 0 ? rows : M.rows()) + "x" +
                   std::to_string(cols >= 0 ? cols : M.cols()) + " matrix, found " +
                   std::to_string(M.rows()) + "x" + std::to_string(M.cols()));
    }
    return M;
  }

 private:
  std::map<std::string, std::pair<int, int>> positions_;
  std::string source_;
};

ExperimentConfig read(const Json& root, const Reader& in) {
  const Path top;
  in.check_keys(root, top,
                {"description", "alpha", "system", "init", "cost", "bounds", "chance", "solver",
                 "sim"});
  ExperimentConfig cfg;
  if (root.contains("description")) {
    if (!root["description"].is_string()) in.fail(top / "description", "expected a string");
    cfg.description = root["description"].get<std::string>();
  }
  auto& p = cfg.problem;

  const Json& alpha = in.required(root, top, "alpha");
  p.alpha = in.number(alpha, top / "alpha");
  if (!(p.alpha > 0.0 && p.alpha < 1.0)) in.fail(top / "alpha", "must lie in (0, 1)");

  const Path sys = top / "system";
  const Json& js = in.required(root, top, "system");
  in.check_keys(js, sys, {"A", "B", "W", "Ac", "Bc", "t_s"});
  if (js.contains("A") || js.contains("B")) {
    if (js.contains("Ac") || js.contains("Bc") || js.contains("t_s")) {
      in.fail(sys, "give either {A, B} or {Ac, Bc, t_s}, not both");
    }
    const Matrix A = in.matrix(in.required(js, sys, "A"), sys / "A", -1, -1);
    if (A.rows() != A.cols() || A.rows() == 0) in.fail(sys / "A", "must be square and nonempty");
    p.system.A = A;
    p.system.B = in.matrix(in.required(js, sys, "B"), sys / "B", A.rows(), -1);
  } else {
    EulerModel e;
    e.Ac = in.matrix(in.required(js, sys, "Ac"), sys / "Ac", -1, -1);
    if (e.Ac.rows() != e.Ac.cols() || e.Ac.rows() == 0) {
      in.fail(sys / "Ac", "must be square and nonempty");
    }
    e.Bc = in.matrix(in.required(js, sys, "Bc"), sys / "Bc", e.Ac.rows(), -1);
    if (js.contains("t_s")) e.t_s = in.number(js["t_s"], sys / "t_s");
    if (!(e.t_s > 0.0)) in.fail(sys / "t_s", "must be positive");
    p.system.A = Matrix::Identity(e.Ac.rows(), e.Ac.cols()) + e.t_s * e.Ac;
    p.system.B = e.t_s * e.Bc;
    cfg.euler = e;
  }
  const Eigen::Index n = p.system.A.rows(), m = p.system.B.cols();
  if (m == 0) in.fail(sys, "the system needs at least one input");
  p.system.W = in.matrix(in.required(js, sys, "W"), sys / "W", n, n);

  const Path ini = top / "init";
  const Json& ji = in.required(root, top, "init");
  in.check_keys(ji, ini, {"m0", "Sigma0"});
  p.init.m0 = in.vector(in.required(ji, ini, "m0"), ini / "m0", n);
  p.init.Sigma0 = in.matrix(in.required(ji, ini, "Sigma0"), ini / "Sigma0", n, n);

  const Path cst = top / "cost";
  const Json& jc = in.required(root, top, "cost");
  in.check_keys(jc, cst, {"Q0", "R0"});
  p.cost.Q = in.matrix(in.required(jc, cst, "Q0"), cst / "Q0", n, n);
  p.cost.R = in.matrix(in.required(jc, cst, "R0"), cst / "R0", m, m);

  if (root.contains("bounds")) {
    const Path bp = top / "bounds";
    const Json& jb = root["bounds"];
    if (!jb.is_array()) in.fail(bp, "expected an array");
    for (std::size_t i = 0; i < jb.size(); ++i) {
      const Path at = bp[i];
      in.check_keys(jb[i], at, {"Q", "R", "beta"});
      MomentBound b;
      b.cost.Q = in.matrix(in.required(jb[i], at, "Q"), at / "Q", n, n);
      b.cost.R = in.matrix(in.required(jb[i], at, "R"), at / "R", m, m);
      b.beta = in.number(in.required(jb[i], at, "beta"), at / "beta");
      if (!(b.beta >= 0.0)) in.fail(at / "beta", "must be nonnegative");
      p.moment_bounds.push_back(std::move(b));
    }
  }

  if (root.contains("chance")) {
    const Path cp = top / "chance";
    const Json& jch = root["chance"];
    if (!jch.is_array()) in.fail(cp, "expected an array");
    for (std::size_t i = 0; i < jch.size(); ++i) {
      const Path at = cp[i];
      in.check_keys(jch[i], at, {"g", "h", "eps", "mode"});
      ChanceSpec c;
      c.g = in.vector(in.required(jch[i], at, "g"), at / "g", n);
      c.h = in.number(in.required(jch[i], at, "h"), at / "h");
      c.eps = in.number(in.required(jch[i], at, "eps"), at / "eps");
      if (jch[i].contains("mode")) {
        const Json& mode = jch[i]["mode"];
        if (mode == "markov") {
          c.mode = ChanceMode::kMarkov;
        } else if (mode == "gaussian") {
          c.mode = ChanceMode::kGaussian;
        } else {
          in.fail(at / "mode", "expected \"markov\" or \"gaussian\"");
        }
      }
      try {
        to_moment_bound(c, p.alpha, static_cast<int>(m));
      } catch (const std::invalid_argument& e) {
        in.fail(at, e.what());
      }
      p.chance_specs.push_back(std::move(c));
    }
  }

  if (root.contains("solver")) {
    const Path sp = top / "solver";
    const Json& jsv = root["solver"];
    in.check_keys(jsv, sp, {"tol", "max_iter"});
    if (jsv.contains("tol")) {
      cfg.solver.tol = in.number(jsv["tol"], sp / "tol");
      if (!(cfg.solver.tol > 0.0)) in.fail(sp / "tol", "must be positive");
    }
    if (jsv.contains("max_iter")) {
      if (!jsv["max_iter"].is_number_integer() || jsv["max_iter"].get<long long>() < 1) {
        in.fail(sp / "max_iter", "expected a positive integer");
      }
      cfg.solver.max_iter = jsv["max_iter"].get<int>();
    }
  }

  if (root.contains("sim")) {
    const Path sp = top / "sim";
    const Json& jsm = root["sim"];
    in.check_keys(jsm, sp, {"n_traj", "seed", "horizon"});
    if (jsm.contains("n_traj")) {
      if (!jsm["n_traj"].is_number_integer() || jsm["n_traj"].get<long long>() < 1) {
        in.fail(sp / "n_traj", "expected a positive integer");
      }
      cfg.sim.n_traj = jsm["n_traj"].get<int>();
    }
    if (jsm.contains("seed")) {
      if (!jsm["seed"].is_number_unsigned()) in.fail(sp / "seed", "expected a nonnegative integer");
      cfg.sim.seed = jsm["seed"].get<std::uint64_t>();
    }
    if (jsm.contains("horizon")) {
      const Json& h = jsm["horizon"];
      if (h == "auto") {
        cfg.sim.horizon.reset();
      } else if (h.is_number_integer() && h.get<long long>() >= 0) {
        cfg.sim.horizon = h.get<int>();
      } else {
        in.fail(sp / "horizon", "expected \"auto\" or a nonnegative integer");
      }
    }
  }
  return cfg;
}

bool same_matrix(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

}  // namespace

ExperimentConfig parse_config(std::string_view text, std::string_view source) {
  Json root;
  try {
    root = Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    // e.byte is the 1-based offset of the offending character.
    int line = 1, col = 1;
    const std::size_t stop = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string msg = e.what();
    if (const auto colon = msg.find(": "); colon != std::string::npos) msg = msg.substr(colon + 2);
    throw ConfigError("", "invalid JSON: " + msg,
                      std::string(source) + ":" + std::to_string(line) + ":" + std::to_string(col));
  }
  return read(root, Reader(text, source));
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw ConfigError("", "cannot open file", path.string());
  std::ostringstream text;
  text << file.rdbuf();
  return parse_config(text.str(), path.string());
}

std::string emit_config(const ExperimentConfig& cfg) {
  const auto& p = cfg.problem;
  Json root;
  root["description"] = cfg.description;
  root["alpha"] = p.alpha;
  Json sys;
  if (cfg.euler) {
    sys["t_s"] = cfg.euler->t_s;
    sys["Ac"] = matrix_json(cfg.euler->Ac);
    sys["Bc"] = matrix_json(cfg.euler->Bc);
  } else {
    sys["A"] = matrix_json(p.system.A);
    sys["B"] = matrix_json(p.system.B);
  }
  sys["W"] = matrix_json(p.system.W);
  root["system"] = std::move(sys);
  root["init"] = {{"m0", vector_json(p.init.m0)}, {"Sigma0", matrix_json(p.init.Sigma0)}};
  root["cost"] = {{"Q0", matrix_json(p.cost.Q)}, {"R0", matrix_json(p.cost.R)}};
  Json bounds = Json::array();
  for (const auto& b : p.moment_bounds) {
    bounds.push_back({{"Q", matrix_json(b.cost.Q)}, {"R", matrix_json(b.cost.R)}, {"beta", b.beta}});
  }
  root["bounds"] = std::move(bounds);
  Json chance = Json::array();
  for (const auto& c : p.chance_specs) {
    chance.push_back({{"g", vector_json(c.g)},
                      {"h", c.h},
                      {"eps", c.eps},
                      {"mode", std::string(to_string(c.mode))}});
  }
  root["chance"] = std::move(chance);
  root["solver"] = {{"tol", cfg.solver.tol}, {"max_iter", cfg.solver.max_iter}};
  Json sim;
  sim["n_traj"] = cfg.sim.n_traj;
  sim["seed"] = cfg.sim.seed;
  sim["horizon"] = cfg.sim.horizon ? Json(*cfg.sim.horizon) : Json("auto");
  root["sim"] = std::move(sim);
  return pretty_json(root);
}

bool same_config(const ExperimentConfig& a, const ExperimentConfig& b) {
  const auto &p = a.problem, &q = b.problem;
  if (a.description != b.description || a.euler.has_value() != b.euler.has_value()) return false;
  if (a.euler && !(same_matrix(a.euler->Ac, b.euler->Ac) && same_matrix(a.euler->Bc, b.euler->Bc) &&
                   a.euler->t_s == b.euler->t_s)) {
    return false;
  }
  if (!(same_matrix(p.system.A, q.system.A) && same_matrix(p.system.B, q.system.B) &&
        same_matrix(p.system.W, q.system.W) && same_matrix(p.init.Sigma0, q.init.Sigma0) &&
        same_matrix(p.init.m0, q.init.m0) && same_matrix(p.cost.Q, q.cost.Q) &&
        same_matrix(p.cost.R, q.cost.R) && p.alpha == q.alpha)) {
    return false;
  }
  if (p.moment_bounds.size() != q.moment_bounds.size() ||
      p.chance_specs.size() != q.chance_specs.size()) {
    return false;
  }
  for (std::size_t i = 0; i < p.moment_bounds.size(); ++i) {
    const auto &x = p.moment_bounds[i], &y = q.moment_bounds[i];
    if (!(same_matrix(x.cost.Q, y.cost.Q) && same_matrix(x.cost.R, y.cost.R) && x.beta == y.beta)) {
      return false;
    }
  }
  for (std::size_t i = 0; i < p.chance_specs.size(); ++i) {
    const auto &x = p.chance_specs[i], &y = q.chance_specs[i];
    if (!(same_matrix(x.g, y.g) && x.h == y.h && x.eps == y.eps && x.mode == y.mode)) return false;
  }
  return a.solver.tol == b.solver.tol && a.solver.max_iter == b.solver.max_iter &&
         a.sim.n_traj == b.sim.n_traj && a.sim.seed == b.sim.seed && a.sim.horizon == b.sim.horizon;
}

}  // namespace occlqg::cli
