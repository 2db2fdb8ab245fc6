#include "chaoslab/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace chaoslab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---- config parsing ---------------------------------------------------------

// Walks one JSON object, remembering which keys were read so the rest can be rejected.
class ObjectReader {
public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  template <class T>
  T get(const std::string& key, T fallback) {
    seen_.insert(key);
    if (!has(key)) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(field(key), std::string("wrong type: ") + e.what());
    }
  }

  template <class T>
  std::optional<T> optional(const std::string& key) {
    seen_.insert(key);
    if (!has(key)) return std::nullopt;
    return get<T>(key, T{});
  }

  ObjectReader child(const std::string& key) {
    seen_.insert(key);
    static const json empty = json::object();
    return ObjectReader(has(key) ? j_.at(key) : empty, field(key));
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError(field(k), "unknown field");
  }

private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Vec2 parse_point(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError(field, "expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

InitialDensity parse_initial(ObjectReader r) {
  const auto kind = r.get<std::string>("kind", "gaussian");
  InitialDensity d;
  if (kind == "gaussian") {
    GaussianBlob b;
    b.center = r.has("center") ? parse_point(r.raw("center"), r.field("center")) : Vec2{};
    b.sigma = r.get<double>("sigma", 0.5);
    d.shape = std::vector<GaussianBlob>{b};
  } else if (kind == "mixture") {
    if (!r.has("components")) throw ConfigError(r.field("components"), "required for a mixture");
    const json& comps = r.raw("components");
    if (!comps.is_array() || comps.empty()) throw ConfigError(r.field("components"), "expected a non-empty array");
    std::vector<GaussianBlob> blobs;
    for (std::size_t i = 0; i < comps.size(); ++i) {
      ObjectReader c(comps[i], r.field("components") + "[" + std::to_string(i) + "]");
      GaussianBlob b;
      b.center = c.has("center") ? parse_point(c.raw("center"), c.field("center")) : Vec2{};
      b.sigma = c.get<double>("sigma", 0.5);
      b.weight = c.get<double>("weight", 1.0);
      c.finish();
      blobs.push_back(b);
    }
    d.shape = blobs;
  } else if (kind == "uniform_disk") {
    UniformDisk u;
    u.center = r.has("center") ? parse_point(r.raw("center"), r.field("center")) : Vec2{};
    u.radius = r.get<double>("radius", 1.0);
    d.shape = u;
  } else {
    throw ConfigError(r.field("kind"), "expected gaussian, mixture or uniform_disk");
  }
  r.finish();
  return d;
}

json initial_to_json(const InitialDensity& d) {
  if (const auto* blobs = std::get_if<std::vector<GaussianBlob>>(&d.shape)) {
    if (blobs->size() == 1 && (*blobs)[0].weight == 1.0)
      return {{"kind", "gaussian"}, {"center", {(*blobs)[0].center.x, (*blobs)[0].center.y}},
              {"sigma", (*blobs)[0].sigma}};
    json comps = json::array();
    for (const auto& b : *blobs)
      comps.push_back({{"center", {b.center.x, b.center.y}}, {"sigma", b.sigma}, {"weight", b.weight}});
    return {{"kind", "mixture"}, {"components", comps}};
  }
  const auto& u = std::get<UniformDisk>(d.shape);
  return {{"kind", "uniform_disk"}, {"center", {u.center.x, u.center.y}}, {"radius", u.radius}};
}

PsiKind parse_psi(const std::string& s, const std::string& field) {
  for (PsiKind k : {PsiKind::phi, PsiKind::grad_norm, PsiKind::grad_x, PsiKind::grad_y})
    if (to_string(k) == s) return k;
  throw ConfigError(field, "expected phi, grad_norm, grad_x or grad_y");
}

// ---- small helpers -----------------------------------------------------------

double sde_dt(const ExperimentConfig& cfg, double eps) {
  const double target = cfg.dt_sde.value_or(default_sde_dt(eps, cfg.grid.h()));
  const double steps = std::ceil(cfg.T / target - 1e-9);
  return cfg.T / steps;
}

double epsilon_for(const ExperimentConfig& cfg, long N, RegimeParams* out) {
  RegimeParams p = plan(cfg.theta, cfg.alpha, cfg.m, N, cfg.theorem, cfg.gamma, cfg.eta);
  if (out) *out = p;
  return cfg.eps_override.value_or(p.eps);
}

template <class Fn>
void parallel_replicas(int replicas, int threads, Fn&& fn) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(replicas));
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (int r = 0; r < replicas; ++r) {
    try {
      fn(r);
    } catch (...) {
      errors[static_cast<std::size_t>(r)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

MetricRow row(long N, double eps, const ExperimentConfig& cfg, int m, std::string name, const Estimate& e) {
  return {N, eps, cfg.alpha, cfg.theta, m, std::move(name), e.value, e.ci_lo, e.ci_hi, e.n};
}

}  // namespace

// ---- config -----------------------------------------------------------------

std::string to_string(Mode m) {
  switch (m) {
    case Mode::pde: return "pde";
    case Mode::coupling: return "coupling";
    case Mode::lln: return "lln";
    case Mode::regime: return "regime";
    case Mode::sweep: return "sweep";
  }
  return "unknown";
}

Mode parse_mode(const std::string& s) {
  for (Mode m : {Mode::pde, Mode::coupling, Mode::lln, Mode::regime, Mode::sweep})
    if (to_string(m) == s) return m;
  throw ConfigError("mode", "expected pde, coupling, lln, regime or sweep, got '" + s + "'");
}

void ExperimentConfig::validate() const {
  try {
    physical.validate();
  } catch (const DomainError& e) {
    throw ConfigError("physical", e.what());
  }
  try {
    grid.validate();
  } catch (const DomainError& e) {
    throw ConfigError("grid", e.what());
  }
  try {
    initial.validate();
  } catch (const DomainError& e) {
    throw ConfigError("initial", e.what());
  }
  if (!(T > 0.0)) throw ConfigError("time.horizon", "must be positive");
  if (dt_sde && !(*dt_sde > 0.0)) throw ConfigError("time.dt_sde", "must be positive");
  if (record_every < 1) throw ConfigError("time.record_every", "must be >= 1");
  if (pde_output_every < 1) throw ConfigError("time.pde_output_every", "must be >= 1");
  if (replicas < 1) throw ConfigError("replicas", "must be >= 1");
  if (threads < 0) throw ConfigError("threads", "must be >= 0");
  if (N < 1) throw ConfigError("regime.N", "must be positive");
  if (eps_override && !(*eps_override > 0.0 && *eps_override < 1.0))
    throw ConfigError("eps", "must lie in (0, 1)");
  if (mode == Mode::sweep && sweep_N.empty()) throw ConfigError("sweep.N_values", "required in sweep mode");
  if (mode == Mode::lln && lln_N.empty()) throw ConfigError("lln.N_values", "required in lln mode");
  if (mode == Mode::lln && replicas < 50) throw ConfigError("replicas", "lln needs at least 50 replicas");
  for (int mm : lln_moments)
    if (mm < 1) throw ConfigError("lln.moments", "moments must be >= 1");
  if (lln_sample_time < 0.0) throw ConfigError("lln.sample_time", "must be >= 0");

  // Regime feasibility and kernel resolution for every N the mode will use.
  std::vector<long> Ns{N};
  if (mode == Mode::sweep) Ns = sweep_N;
  if (mode == Mode::lln) Ns = lln_N;
  for (long n : Ns) {
    if (n < 1) throw ConfigError("N_values", "must be positive");
    double eps = 0.0;
    try {
      eps = epsilon_for(*this, n, nullptr);
    } catch (const InfeasibleRegime& e) {
      throw ConfigError("regime", e.what());
    }
    if (mode == Mode::regime) continue;
    if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("regime", "eps = N^-gamma must lie in (0, 1)");
    if (grid.h() > 0.25 * eps * (1.0 + 1e-12))
      throw ConfigError("grid.nodes_per_side", "grid spacing must be <= eps/4 (eps=" + std::to_string(eps) + ")");
  }
}

json to_json(const ExperimentConfig& c) {
  json regime = {{"theta", c.theta}, {"alpha", c.alpha}, {"m", c.m}, {"N", c.N},
                 {"theorem", static_cast<int>(c.theorem)}};
  if (c.gamma) regime["gamma"] = *c.gamma;
  if (c.eta) regime["eta"] = *c.eta;
  json time = {{"horizon", c.T}, {"record_every", c.record_every}, {"pde_output_every", c.pde_output_every}};
  if (c.dt_sde) time["dt_sde"] = *c.dt_sde;
  json j = {
      {"mode", to_string(c.mode)},
      {"physical", {{"chi", c.physical.chi}, {"mu", c.physical.mu}}},
      {"regime", regime},
      {"grid", {{"box_length", c.grid.L}, {"nodes_per_side", c.grid.G}}},
      {"time", time},
      {"replicas", c.replicas},
      {"seed", c.seed},
      {"threads", c.threads},
      {"initial", initial_to_json(c.initial)},
      {"interaction", c.interaction == InteractionMethod::fast ? "fast" : "exact"},
      {"sweep", {{"N_values", c.sweep_N}}},
      {"lln",
       {{"N_values", c.lln_N},
        {"moments", c.lln_moments},
        {"psi", to_string(c.lln_psi)},
        {"sample_time", c.lln_sample_time}}},
      {"write_trials", c.write_trials},
      {"output_dir", c.output_dir},
  };
  if (c.eps_override) j["eps"] = *c.eps_override;
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  ObjectReader r(j, "");
  c.mode = parse_mode(r.get<std::string>("mode", to_string(c.mode)));
  {
    ObjectReader p = r.child("physical");
    c.physical.chi = p.get<double>("chi", c.physical.chi);
    c.physical.mu = p.get<double>("mu", c.physical.mu);
    p.finish();
  }
  {
    ObjectReader g = r.child("regime");
    c.theta = g.get<double>("theta", c.theta);
    c.alpha = g.get<double>("alpha", c.alpha);
    c.m = g.get<int>("m", c.m);
    c.N = g.get<long>("N", c.N);
    const int th = g.get<int>("theorem", 1);
    if (th != 1 && th != 2) throw ConfigError("regime.theorem", "expected 1 or 2");
    c.theorem = th == 1 ? Theorem::deviation_probability : Theorem::strong_chaos;
    c.gamma = g.optional<double>("gamma");
    c.eta = g.optional<double>("eta");
    g.finish();
  }
  c.eps_override = r.optional<double>("eps");
  {
    ObjectReader g = r.child("grid");
    c.grid.L = g.get<double>("box_length", c.grid.L);
    c.grid.G = g.get<int>("nodes_per_side", c.grid.G);
    g.finish();
  }
  {
    ObjectReader t = r.child("time");
    c.T = t.get<double>("horizon", c.T);
    c.dt_sde = t.optional<double>("dt_sde");
    c.record_every = t.get<int>("record_every", c.record_every);
    c.pde_output_every = t.get<int>("pde_output_every", c.pde_output_every);
    t.finish();
  }
  c.replicas = r.get<int>("replicas", c.replicas);
  c.seed = r.get<std::uint64_t>("seed", c.seed);
  c.threads = r.get<int>("threads", c.threads);
  if (r.has("initial")) c.initial = parse_initial(r.child("initial"));
  else r.child("initial");
  {
    const auto m = r.get<std::string>("interaction", "fast");
    if (m != "fast" && m != "exact") throw ConfigError("interaction", "expected fast or exact");
    c.interaction = m == "fast" ? InteractionMethod::fast : InteractionMethod::exact;
  }
  {
    ObjectReader s = r.child("sweep");
    c.sweep_N = s.get<std::vector<long>>("N_values", {});
    s.finish();
  }
  {
    ObjectReader l = r.child("lln");
    c.lln_N = l.get<std::vector<long>>("N_values", {});
    c.lln_moments = l.get<std::vector<int>>("moments", c.lln_moments);
    c.lln_psi = parse_psi(l.get<std::string>("psi", "phi"), l.field("psi"));
    c.lln_sample_time = l.get<double>("sample_time", c.lln_sample_time);
    l.finish();
  }
  c.write_trials = r.get<bool>("write_trials", c.write_trials);
  c.output_dir = r.get<std::string>("output_dir", c.output_dir);
  r.finish();
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config", "cannot open " + path.string());
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  return config_from_json(j);
}

// where the output goes is not part of the experiment
std::string config_hash(const ExperimentConfig& c) {
  json j = to_json(c);
  j.erase("output_dir");
  return fnv1a_hex(j.dump());
}

// ---- manifest ---------------------------------------------------------------

json RunManifest::to_json(bool with_timings) const {
  json j = {{"config_hash", config_hash}, {"code_version", code_version}, {"mode", mode},
            {"replica_seeds", replica_seeds}, {"files", files}, {"status", status}};
  if (!failure.empty()) j["failure"] = failure;
  if (with_timings) j["timings_s"] = timings_s;
  return j;
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  m.config_hash = j.value("config_hash", "");
  m.code_version = j.value("code_version", "");
  m.mode = j.value("mode", "");
  m.replica_seeds = j.value("replica_seeds", std::vector<std::uint64_t>{});
  m.files = j.value("files", std::vector<std::string>{});
  m.timings_s = j.value("timings_s", std::map<std::string, double>{});
  m.status = j.value("status", "ok");
  m.failure = j.value("failure", "");
  return m;
}

// ---- metrics CSV --------------------------------------------------------------

void write_metrics_csv(const fs::path& path, const std::vector<MetricRow>& rows) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  os << std::setprecision(17) << "N,eps,alpha,theta,m,statistic_name,value,ci_lo,ci_hi,n_replicas\n";
  for (const auto& r : rows)
    os << r.N << ',' << r.eps << ',' << r.alpha << ',' << r.theta << ',' << r.m << ',' << r.statistic << ','
       << r.value << ',' << r.ci_lo << ',' << r.ci_hi << ',' << r.n_replicas << '\n';
}

std::vector<MetricRow> read_metrics_csv(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot read " + path.string());
  std::string line;
  std::getline(is, line);
  std::vector<MetricRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::vector<std::string> cells;
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 10) throw Error("malformed metrics row in " + path.string());
    MetricRow r;
    r.N = std::stol(cells[0]);
    r.eps = std::stod(cells[1]);
    r.alpha = std::stod(cells[2]);
    r.theta = std::stod(cells[3]);
    r.m = std::stoi(cells[4]);
    r.statistic = cells[5];
    r.value = std::stod(cells[6]);
    r.ci_lo = std::stod(cells[7]);
    r.ci_hi = std::stod(cells[8]);
    r.n_replicas = std::stoul(cells[9]);
    rows.push_back(r);
  }
  return rows;
}

// ---- recipes ----------------------------------------------------------------

int worker_count(int requested) {
  int n = requested > 0 ? requested : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* cap = std::getenv("CHAOS_LAB_THREADS")) {
    const int c = std::atoi(cap);
    if (c > 0) n = std::min(n, c);
  }
  return n;
}

std::vector<Vec2> sample_density(const ScalarField2D& u, std::size_t n, Engine& rng) {
  std::vector<double> w(u.values().begin(), u.values().end());
  for (double& x : w) x = std::max(x, 0.0);
  std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
  std::uniform_real_distribution<double> jitter(-0.5, 0.5);
  const GridSpec& g = u.spec();
  std::vector<Vec2> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t idx = pick(rng);
    const int ix = static_cast<int>(idx % static_cast<std::size_t>(g.G));
    const int iy = static_cast<int>(idx / static_cast<std::size_t>(g.G));
    const double jx = jitter(rng), jy = jitter(rng);
    out.push_back(wrap({g.coord(ix) + jx * g.h(), g.coord(iy) + jy * g.h()}, g));
  }
  return out;
}

CouplingResult run_coupling(const ExperimentConfig& cfg, long N) {
  CouplingResult res;
  const double eps = epsilon_for(cfg, N, &res.regime);
  auto kernel = std::make_shared<const PotentialKernel>(build_kernel(cfg.physical, {eps}, cfg.grid));
  const double dt = sde_dt(cfg, eps);
  const PdeState s0 = make_pde_state(mollify_initial(cfg.initial.on_grid(cfg.grid), {eps}), kernel);
  const MeanFieldPath path = solve_mean_field(s0, cfg.T, dt);

  res.trials.resize(static_cast<std::size_t>(cfg.replicas));
  res.distances.resize(static_cast<std::size_t>(cfg.replicas));
  parallel_replicas(cfg.replicas, worker_count(cfg.threads), [&](int r) {
    CoupledRunConfig rc;
    rc.N = static_cast<std::size_t>(N);
    rc.alpha = cfg.alpha;
    rc.seed = replica_seed(cfg.seed, static_cast<std::uint64_t>(r));
    rc.record_every = cfg.record_every;
    rc.method = cfg.interaction;
    rc.initial = cfg.initial;
    TrialRecord tr = coupled_run(rc, path, *kernel);
    const double bw = silverman_bandwidth(tr.final_X, cfg.grid);
    const ScalarField2D f = kde(tr.final_X, bw, cfg.grid);
    res.distances[static_cast<std::size_t>(r)] = ckp_check(f, path.final_state.u, bw);
    res.trials[static_cast<std::size_t>(r)] = std::move(tr);
  });

  const std::size_t n = res.trials.size();
  std::vector<double> sup_dev, s_final, l1, ent, l1_half, l1_double;
  std::size_t taus = 0, violations = 0;
  for (std::size_t r = 0; r < n; ++r) {
    const auto& tr = res.trials[r];
    sup_dev.push_back(tr.sup_dev);
    s_final.push_back(tr.S_alpha_k.back());
    if (tr.tau_hit) ++taus;
    const auto& d = res.distances[r];
    l1.push_back(d.l1);
    ent.push_back(d.rel_entropy);
    if (d.violation) ++violations;
    const double bw = d.bandwidth;
    l1_half.push_back(l1_distance(kde(tr.final_X, std::max(0.5 * bw, cfg.grid.h()), cfg.grid), path.final_state.u));
    l1_double.push_back(l1_distance(kde(tr.final_X, 2.0 * bw, cfg.grid), path.final_state.u));
  }
  const int m = cfg.m;
  res.rows.push_back(row(N, eps, cfg, m, "deviation_probability", deviation_probability(res.trials, cfg.alpha, cfg.T)));
  res.rows.push_back(row(N, eps, cfg, m, "tau_hit_fraction", wilson(taus, n)));
  res.rows.push_back(row(N, eps, cfg, m, "sup_deviation_mean", bootstrap_mean(sup_dev)));
  res.rows.push_back(row(N, eps, cfg, m, "S_alpha_k_mean", bootstrap_mean(s_final)));
  res.rows.push_back(row(N, eps, cfg, m, "l1_marginal", bootstrap_mean(l1)));
  res.rows.push_back(row(N, eps, cfg, m, "l1_marginal_half_bandwidth", bootstrap_mean(l1_half)));
  res.rows.push_back(row(N, eps, cfg, m, "l1_marginal_double_bandwidth", bootstrap_mean(l1_double)));
  res.rows.push_back(row(N, eps, cfg, m, "rel_entropy_marginal", bootstrap_mean(ent)));
  res.rows.push_back(row(N, eps, cfg, m, "ckp_violations", {static_cast<double>(violations), 0.0, 0.0, n}));
  return res;
}

LlnResult run_lln(const ExperimentConfig& cfg, long N) {
  const double eps = epsilon_for(cfg, N, nullptr);
  auto kernel = std::make_shared<const PotentialKernel>(build_kernel(cfg.physical, {eps}, cfg.grid));
  PdeState s = make_pde_state(mollify_initial(cfg.initial.on_grid(cfg.grid), {eps}), kernel);
  const bool at_start = cfg.lln_sample_time == 0.0;
  if (!at_start) {
    const PdeRun run = chaoslab::run(s, cfg.lln_sample_time, cfg.grid.h() * cfg.grid.h() / 8.0, 1 << 30);
    s = run.snapshots.back().state;
  }
  const ScalarField2D psi = psi_table(*kernel, cfg.lln_psi);

  LlnResult res;
  res.stats.resize(static_cast<std::size_t>(cfg.replicas));
  parallel_replicas(cfg.replicas, worker_count(cfg.threads), [&](int r) {
    Engine rng(replica_seed(cfg.seed, static_cast<std::uint64_t>(r)));
    std::vector<Vec2> x;
    if (at_start) {
      // Exact draws from u_0 * j^eps.
      x.reserve(static_cast<std::size_t>(N));
      for (long i = 0; i < N; ++i) x.push_back(wrap(cfg.initial.draw(rng) + draw_mollifier(rng, eps), cfg.grid));
    } else {
      x = sample_density(s.u, static_cast<std::size_t>(N), rng);
    }
    res.stats[static_cast<std::size_t>(r)] = lln_statistic(x, psi, s.u, cfg.theta, to_string(cfg.lln_psi));
  });

  for (int mm : cfg.lln_moments)
    res.rows.push_back(row(N, eps, cfg, mm, "lln_moment_m" + std::to_string(mm), lln_moment(res.stats, mm)));
  std::size_t in_b = 0;
  std::vector<double> h1;
  for (const auto& st : res.stats) {
    if (st.in_B) ++in_b;
    h1.push_back(st.hbar.front());
  }
  res.rows.push_back(row(N, eps, cfg, cfg.m, "P_B", wilson(in_b, res.stats.size())));
  res.rows.push_back(row(N, eps, cfg, cfg.m, "hbar1_mean", bootstrap_mean(h1)));
  return res;
}

RunManifest run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const fs::path out = cfg.output_dir;
  fs::create_directories(out);

  RunManifest man;
  man.config_hash = config_hash(cfg);
  man.mode = to_string(cfg.mode);
  if (cfg.mode != Mode::regime && cfg.mode != Mode::pde)
    for (int r = 0; r < cfg.replicas; ++r) man.replica_seeds.push_back(replica_seed(cfg.seed, static_cast<std::uint64_t>(r)));

  auto add_file = [&](const fs::path& rel) { man.files.push_back(rel.generic_string()); };
  auto write_manifest = [&] {
    std::ofstream os(out / "manifest.json");
    os << man.to_json().dump(2) << '\n';
  };
  {
    std::ofstream os(out / "config.json");
    os << to_json(cfg).dump(2) << '\n';
  }
  add_file("config.json");

  const auto t0 = std::chrono::steady_clock::now();
  auto lap = [&](const std::string& name) {
    man.timings_s[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  try {
    switch (cfg.mode) {
      case Mode::regime: {
        const RegimeParams p = plan(cfg.theta, cfg.alpha, cfg.m, cfg.N, cfg.theorem, cfg.gamma, cfg.eta);
        std::ofstream os(out / "certificate.txt");
        write_certificate(os, p);
        add_file("certificate.txt");
        break;
      }
      case Mode::pde: {
        const double eps = epsilon_for(cfg, cfg.N, nullptr);
        auto kernel = std::make_shared<const PotentialKernel>(build_kernel(cfg.physical, {eps}, cfg.grid));
        const PdeState s0 = make_pde_state(mollify_initial(cfg.initial.on_grid(cfg.grid), {eps}), kernel);
        const double h = cfg.grid.h();
        const double dt = cfg.T / std::ceil(cfg.T / (h * h / 8.0) - 1e-9);
        PdeRun r;
        try {
          r = run(s0, cfg.T, dt, cfg.pde_output_every);
        } catch (const PdeFailure& f) {
          write_field_csv((out / "failure_state.csv").string(), f.state().u, f.state().t);
          add_file("failure_state.csv");
          throw;
        }
        std::vector<Diagnostics> diags;
        fs::create_directories(out / "snapshots");
        for (std::size_t i = 0; i < r.snapshots.size(); ++i) {
          diags.push_back(r.snapshots[i].diag);
          std::ostringstream name;
          name << "snapshots/u_" << std::setw(5) << std::setfill('0') << i << ".csv";
          write_field_csv((out / name.str()).string(), r.snapshots[i].state.u, r.snapshots[i].state.t);
          add_file(name.str());
        }
        std::ofstream os(out / "diagnostics.csv");
        write_diagnostics_csv(os, diags);
        add_file("diagnostics.csv");
        std::vector<MetricRow> rows;
        const auto& last = r.snapshots.back().diag;
        rows.push_back({cfg.N, eps, cfg.alpha, cfg.theta, cfg.m, "mass_drift",
                        std::abs(last.mass - r.snapshots.front().diag.mass), 0, 0, 1});
        rows.push_back({cfg.N, eps, cfg.alpha, cfg.theta, cfg.m, "gradient_blowup_time",
                        r.gradient_blowup_time.value_or(-1.0), 0, 0, 1});
        write_metrics_csv(out / "metrics.csv", rows);
        add_file("metrics.csv");
        break;
      }
      case Mode::coupling:
      case Mode::sweep: {
        const std::vector<long> Ns = cfg.mode == Mode::sweep ? cfg.sweep_N : std::vector<long>{cfg.N};
        std::vector<MetricRow> rows;
        for (long N : Ns) {
          const CouplingResult res = run_coupling(cfg, N);
          rows.insert(rows.end(), res.rows.begin(), res.rows.end());
          if (cfg.write_trials) {
            const fs::path dir = fs::path("trials") / ("N" + std::to_string(N));
            fs::create_directories(out / dir);
            for (std::size_t r = 0; r < res.trials.size(); ++r) {
              std::ostringstream name;
              name << "replica_" << std::setw(4) << std::setfill('0') << r << ".csv";
              std::ofstream os(out / dir / name.str());
              write_trial_csv(os, res.trials[r]);
              add_file(dir / name.str());
            }
          }
          lap("N=" + std::to_string(N));
        }
        write_metrics_csv(out / "metrics.csv", rows);
        add_file("metrics.csv");
        break;
      }
      case Mode::lln: {
        std::vector<MetricRow> rows;
        for (long N : cfg.lln_N) {
          const LlnResult res = run_lln(cfg, N);
          rows.insert(rows.end(), res.rows.begin(), res.rows.end());
          lap("N=" + std::to_string(N));
        }
        write_metrics_csv(out / "metrics.csv", rows);
        add_file("metrics.csv");
        break;
      }
    }
  } catch (const std::exception& e) {
    man.status = "failed";
    man.failure = e.what();
    lap("total");
    write_manifest();
    throw;
  }
  lap("total");
  write_manifest();
  return man;
}

// ---- report -----------------------------------------------------------------

std::vector<ReportTable> report(const fs::path& run_dir) {
  const fs::path mpath = run_dir / "manifest.json";
  if (!fs::exists(mpath)) throw Error("report: missing " + mpath.string());
  json j;
  {
    std::ifstream is(mpath);
    is >> j;
  }
  const RunManifest man = RunManifest::from_json(j);
  if (man.files.empty()) throw Error("report: manifest lists no files");
  std::vector<std::string> missing;
  for (const auto& f : man.files)
    if (!fs::exists(run_dir / f)) missing.push_back(f);
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw Error("report: missing files: " + list);
  }
  std::vector<MetricRow> rows;
  for (const auto& f : man.files)
    if (fs::path(f).filename() == "metrics.csv") {
      auto part = read_metrics_csv(run_dir / f);
      rows.insert(rows.end(), part.begin(), part.end());
    }
  if (rows.empty()) throw Error("report: manifest has no metrics");

  std::map<std::string, std::vector<MetricRow>> by_stat;
  for (const auto& r : rows) by_stat[r.statistic].push_back(r);

  std::vector<ReportTable> tables;
  for (const auto& [name, rs] : by_stat) {
    ReportTable t;
    t.statistic = name;
    std::vector<double> x;
    std::vector<Estimate> y;
    bool positive = true;
    for (const auto& r : rs) {
      x.push_back(static_cast<double>(r.N));
      y.push_back({r.value, r.ci_lo, r.ci_hi, r.n_replicas});
      positive = positive && r.value > 0.0;
    }
    std::set<double> distinct(x.begin(), x.end());
    if (distinct.size() < 2) {
      t.status = "insufficient points";
    } else if (!positive) {
      t.status = "non-positive values";
    } else {
      t.fit = loglog_fit(x, y);
      t.status = "ok";
    }
    t.fit.n = rs.size();
    tables.push_back(t);

    std::ofstream os(run_dir / ("plot_" + name + ".csv"));
    os << std::setprecision(17) << "N,value,ci_lo,ci_hi\n";
    for (const auto& r : rs) os << r.N << ',' << r.value << ',' << r.ci_lo << ',' << r.ci_hi << '\n';
  }
  std::ofstream os(run_dir / "summary.csv");
  os << std::setprecision(17) << "statistic_name,n_points,slope,intercept,r2,slope_ci_lo,slope_ci_hi,status\n";
  for (const auto& t : tables)
    os << t.statistic << ',' << t.fit.n << ',' << t.fit.slope << ',' << t.fit.intercept << ',' << t.fit.r2 << ','
       << t.fit.slope_ci_lo << ',' << t.fit.slope_ci_hi << ',' << t.status << '\n';
  return tables;
}

}  // namespace chaoslab
