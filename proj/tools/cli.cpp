#include "cli.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ldplab/ldp.hpp"
#include "ldplab/spec_file.hpp"

namespace ldplab::cli {

namespace {

using Json = nlohmann::ordered_json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Json number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

std::vector<double> parse_real_grid(const std::string& text) {
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream in(text);
    for (std::string p; std::getline(in, p, ':');) parts.push_back(p);
    if (parts.size() != 3) {
      throw Error(ErrorKind::InvalidArgument, "grid must be start:stop:count");
    }
    const double a = std::stod(parts[0]);
    const double b = std::stod(parts[1]);
    const int count = std::stoi(parts[2]);
    if (count < 1) throw Error(ErrorKind::InvalidArgument, "grid count must be >= 1");
    for (int i = 0; i < count; ++i) {
      out.push_back(count == 1 ? a : a + (b - a) * i / (count - 1));
    }
  } else {
    std::stringstream in(text);
    for (std::string p; std::getline(in, p, ',');) out.push_back(std::stod(p));
  }
  if (out.empty() || !std::is_sorted(out.begin(), out.end())) {
    throw Error(ErrorKind::InvalidArgument, "grid must be nonempty and sorted");
  }
  return out;
}

std::vector<int> parse_int_range(const std::string& text) {
  std::vector<int> out;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream in(text);
    for (std::string p; std::getline(in, p, ':');) parts.push_back(p);
    if (parts.size() < 2 || parts.size() > 3) {
      throw Error(ErrorKind::InvalidArgument, "range must be start:stop[:step]");
    }
    const int a = std::stoi(parts[0]);
    const int b = std::stoi(parts[1]);
    const int step = parts.size() == 3 ? std::stoi(parts[2]) : 1;
    if (step < 1) throw Error(ErrorKind::InvalidArgument, "range step must be >= 1");
    for (int v = a; v <= b; v += step) out.push_back(v);
  } else {
    std::stringstream in(text);
    for (std::string p; std::getline(in, p, ',');) out.push_back(std::stoi(p));
  }
  if (out.empty() || !std::is_sorted(out.begin(), out.end())) {
    throw Error(ErrorKind::InvalidArgument, "range must be nonempty and sorted");
  }
  return out;
}

std::int64_t enumeration_budget() {
  if (const char* env = std::getenv("LDPLAB_BUDGET")) {
    try {
      return static_cast<std::int64_t>(std::stod(env));
    } catch (const std::exception&) {
      throw Error(ErrorKind::InvalidArgument, "LDPLAB_BUDGET is not a number");
    }
  }
  return kDefaultEnumerationBudget;
}

// Collected rows for one command, emitted as JSON lines or CSV.
struct Table {
  std::vector<std::string> columns;
  std::vector<Json> rows;
};

struct Options {
  std::string spec_path;
  std::string out_path;
  std::string format = "json";
  std::uint64_t seed = 0;
  int threads = 0;

  std::string potential;
  std::string g_name;
  std::string phi_name;
  int block = 0;
  std::string t_grid = "-3:3:13";
  double alpha = 0.0;
  std::string alpha_grid;
  int points = 0;
  std::string past;
  int n_max = 12;
  std::string r_list = "1";
  std::string n_range;
  std::string interval;
  std::string mode = "auto";
  double bin_width = 1e-3;
  std::int64_t samples = 100000;
  std::string tilt = "none";
  std::string series_path;
};

Word default_past(const SystemFile& file, int length) {
  return admissible_words(file.spec, std::max(length, 1)).front();
}

Word leaf_past(const SystemFile& file, const Options& o, int block) {
  return o.past.empty() ? default_past(file, block) : file.parse_word(o.past);
}

Json deviation_row(const DeviationPoint& p) {
  Json row;
  row["n"] = p.n;
  row["log_mass"] = number(p.log_mass);
  row["mass"] = number(p.mass);
  row["stderr"] = number(p.std_error);
  row["mass_lower"] = number(p.mass_lower);
  row["mass_upper"] = number(p.mass_upper);
  row["method"] = std::string(to_string(p.method));
  return row;
}

const std::vector<std::string> kDeviationColumns = {
    "n", "log_mass", "mass", "stderr", "mass_lower", "mass_upper", "method"};

DeviationSeries read_series_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open " + path);
  DeviationSeries series;
  std::vector<std::string> header;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream row(line);
    for (std::string c; std::getline(row, c, ',');) cells.push_back(c);
    if (header.empty()) {
      header = cells;
      continue;
    }
    const auto column = [&](const std::string& name) -> std::optional<std::string> {
      const auto it = std::find(header.begin(), header.end(), name);
      if (it == header.end()) return std::nullopt;
      const auto idx = static_cast<std::size_t>(it - header.begin());
      if (idx >= cells.size()) return std::nullopt;
      return cells[idx];
    };
    try {
      DeviationPoint p;
      p.n = std::stoi(column("n").value());
      if (const auto m = column("mass")) {
        p.mass = std::stod(*m);
      } else {
        p.mass = std::exp(std::stod(column("log_mass").value()));
      }
      series.points.push_back(p);
    } catch (const std::exception&) {
      throw Error(ErrorKind::ParseError,
                  path + ": line " + std::to_string(line_no) +
                      " needs columns n and mass (or log_mass)");
    }
  }
  return series;
}

Table run_command(const std::string& command, const SystemFile& file,
                  const Options& o, Json& params) {
  Table table;
  const SubshiftSpec& spec = file.spec;
  const auto need = [&](const std::string& name, const char* flag) -> const Potential& {
    if (name.empty()) {
      throw Error(ErrorKind::InvalidArgument, std::string("missing ") + flag);
    }
    return file.potential(name);
  };

  if (command == "pressure") {
    const Potential& phi = need(o.potential, "--potential");
    params["potential"] = o.potential;
    table.columns = {"pressure"};
    table.rows.push_back(Json{{"pressure", number(pressure(spec, phi, o.block))}});
  } else if (command == "gibbs") {
    const Potential& phi = need(o.potential, "--potential");
    params["potential"] = o.potential;
    const MarkovMeasure mu = equilibrium_state(spec, phi, o.block);
    table.columns = {"from", "to", "probability", "stationary"};
    for (int i = 0; i < mu.chain.size(); ++i) {
      for (int j : mu.chain.successors(i)) {
        table.rows.push_back(Json{{"from", file.format_word(mu.chain.state(i))},
                                  {"to", file.format_word(mu.chain.state(j))},
                                  {"probability", number(mu.transition(i, j))},
                                  {"stationary", number(mu.stationary(i))}});
      }
    }
  } else if (command == "entropy") {
    const Potential& phi = need(o.potential, "--potential");
    params["potential"] = o.potential;
    const MarkovMeasure mu = equilibrium_state(spec, phi, o.block);
    table.columns = {"pressure", "entropy", "integral"};
    table.rows.push_back(Json{{"pressure", number(pressure(spec, phi, o.block))},
                              {"entropy", number(entropy(mu))},
                              {"integral", number(integrate(mu, phi))}});
  } else if (command == "qcurve") {
    const Potential& g = need(o.g_name, "--G");
    const Potential& phi = need(o.phi_name, "--phi");
    params["G"] = o.g_name;
    params["phi"] = o.phi_name;
    params["t"] = o.t_grid;
    table.columns = {"t", "q", "dq"};
    for (double t : parse_real_grid(o.t_grid)) {
      const TiltedState s = tilted_state(spec, g, phi, t);
      table.rows.push_back(Json{{"t", t}, {"q", number(s.q)}, {"dq", number(s.dq)}});
    }
  } else if (command == "rate") {
    const Potential& g = need(o.g_name, "--G");
    const Potential& phi = need(o.phi_name, "--phi");
    params["G"] = o.g_name;
    params["phi"] = o.phi_name;
    params["alpha"] = o.alpha;
    const RateValue r = rate_scalar(spec, g, phi, o.alpha);
    table.columns = {"alpha", "rate", "tilt", "boundary"};
    table.rows.push_back(Json{{"alpha", r.alpha},
                              {"rate", number(r.rate)},
                              {"tilt", number(r.tilt)},
                              {"boundary", r.boundary}});
  } else if (command == "ratecurve") {
    const Potential& g = need(o.g_name, "--G");
    const Potential& phi = need(o.phi_name, "--phi");
    params["G"] = o.g_name;
    params["phi"] = o.phi_name;
    std::vector<double> alphas;
    if (!o.alpha_grid.empty()) {
      alphas = parse_real_grid(o.alpha_grid);
      params["alpha"] = o.alpha_grid;
    } else {
      const int count = o.points > 0 ? o.points : 19;
      alphas = interior_grid(ergodic_range(spec, phi), count);
      params["points"] = count;
    }
    const RateCurve curve = rate_curve(spec, g, phi, alphas);
    table.columns = {"alpha", "rate", "tilt"};
    for (std::size_t i = 0; i < alphas.size(); ++i) {
      table.rows.push_back(Json{{"alpha", alphas[i]},
                                {"rate", number(curve.values[i])},
                                {"tilt", number(curve.tilts[i])}});
    }
  } else if (command == "leaf-audit") {
    const Potential& g = need(o.g_name, "--G");
    params["G"] = o.g_name;
    const Word past = leaf_past(file, o, g.memory());
    params["past"] = file.format_word(past);
    params["n_max"] = o.n_max;
    params["r"] = o.r_list;
    const LeafMeasure leaf = leaf_measure(spec, g, past);
    table.columns = {"r", "n_max", "k_min", "k_max", "half_k_min", "half_k_max",
                     "drift", "stable", "argmin", "argmax", "words"};
    for (int r : parse_int_range(o.r_list)) {
      const GibbsRatioReport rep =
          gibbs_ratio_audit(leaf, o.n_max, r, enumeration_budget());
      table.rows.push_back(Json{{"r", r},
                                {"n_max", o.n_max},
                                {"k_min", number(rep.k_min)},
                                {"k_max", number(rep.k_max)},
                                {"half_k_min", number(rep.half_k_min)},
                                {"half_k_max", number(rep.half_k_max)},
                                {"drift", number(rep.drift)},
                                {"stable", rep.stable()},
                                {"argmin", file.format_word(rep.argmin)},
                                {"argmax", file.format_word(rep.argmax)},
                                {"words", rep.words}});
    }
  } else if (command == "growth") {
    const Potential& g = need(o.g_name, "--G");
    const Potential& phi = need(o.phi_name, "--phi");
    params["G"] = o.g_name;
    params["phi"] = o.phi_name;
    params["n"] = o.n_range;
    const Word past = leaf_past(file, o, std::max(g.memory(), phi.memory()));
    params["past"] = file.format_word(past);
    const LeafMeasure leaf = leaf_measure(spec, g, past);
    const double q = q_value(spec, g, phi, 1.0);
    table.columns = {"n", "estimate", "q", "deviation"};
    for (int n : parse_int_range(o.n_range.empty() ? "10:40:10" : o.n_range)) {
      const double est = growth_estimate(leaf, phi, n);
      table.rows.push_back(Json{{"n", n},
                                {"estimate", number(est)},
                                {"q", number(q)},
                                {"deviation", number(est - q)}});
    }
  } else if (command == "deviation-exact" || command == "deviation-mc" ||
             command == "fit") {
    DeviationSeries series;
    if (command == "fit" && !o.series_path.empty()) {
      params["series"] = o.series_path;
      series = read_series_csv(o.series_path);
    } else {
      const Potential& g = need(o.g_name, "--G");
      const Potential& phi = need(o.phi_name, "--phi");
      if (o.interval.empty()) {
        throw Error(ErrorKind::InvalidArgument, "missing --interval");
      }
      if (o.n_range.empty()) throw Error(ErrorKind::InvalidArgument, "missing --n");
      params["G"] = o.g_name;
      params["phi"] = o.phi_name;
      const Interval l = parse_interval(o.interval);
      params["interval"] = l.to_string();
      params["n"] = o.n_range;
      const Word past = leaf_past(file, o, std::max(g.memory(), phi.memory()));
      params["past"] = file.format_word(past);
      const LeafMeasure leaf = leaf_measure(spec, g, past);
      series.interval = l;
      if (command == "deviation-mc") {
        McOptions mc;
        mc.samples = o.samples;
        mc.seed = o.seed;
        mc.threads = o.threads;
        if (o.tilt == "auto") {
          mc.tilt = recommended_tilt(spec, g, phi, l);
        } else if (o.tilt != "none") {
          mc.tilt = std::stod(o.tilt);
        }
        params["samples"] = o.samples;
        params["tilt"] = number(mc.tilt.value_or(0.0));
        for (int n : parse_int_range(o.n_range)) {
          series.points.push_back(deviation_mass_mc(leaf, phi, l, n, mc));
        }
      } else {
        ExactOptions ex;
        ex.budget = enumeration_budget();
        ex.bin_width = o.bin_width;
        if (o.mode == "enumerate") {
          ex.mode = ExactMode::Enumerate;
        } else if (o.mode == "dp") {
          ex.mode = ExactMode::Dp;
        } else if (o.mode != "auto") {
          throw Error(ErrorKind::InvalidArgument, "--mode must be auto, enumerate or dp");
        }
        params["mode"] = o.mode;
        series = deviation_series_exact(leaf, phi, l, parse_int_range(o.n_range), ex);
      }
    }
    if (command == "fit") {
      const RateFit fit = rate_fit(series);
      table.columns = {"estimate", "log_coefficient", "inverse_coefficient",
                       "residual", "monotone", "points"};
      table.rows.push_back(Json{{"estimate", number(fit.estimate)},
                                {"log_coefficient", number(fit.log_coefficient)},
                                {"inverse_coefficient", number(fit.inverse_coefficient)},
                                {"residual", number(fit.residual)},
                                {"monotone", fit.monotone},
                                {"points", fit.points}});
    } else {
      table.columns = kDeviationColumns;
      for (const auto& p : series.points) table.rows.push_back(deviation_row(p));
    }
  } else if (command == "axioms") {
    params["samples"] = o.samples;
    const AxiomReport rep = axioms_check(spec, static_cast<int>(o.samples), o.seed);
    table.columns = {"samples", "violations", "ss1", "ss2", "ss3", "ss4", "ss5",
                     "idempotence", "ultrametric", "lambda", "max_contraction_ratio"};
    table.rows.push_back(Json{{"samples", rep.samples},
                              {"violations", rep.total_violations()},
                              {"ss1", rep.ss1_violations},
                              {"ss2", rep.ss2_violations},
                              {"ss3", rep.ss3_violations},
                              {"ss4", rep.ss4_violations},
                              {"ss5", rep.ss5_violations},
                              {"idempotence", rep.idempotence_violations},
                              {"ultrametric", rep.ultrametric_violations},
                              {"lambda", rep.contraction},
                              {"max_contraction_ratio", number(rep.max_contraction_ratio)}});
  }
  return table;
}

std::string csv_cell(const Json& v) {
  if (v.is_number_float()) return format_double(v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

void emit(std::ostream& out, const Json& header, const Table& table,
          const std::string& format) {
  if (format == "csv") {
    out << "# " << header.dump() << '\n';
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
      out << (i ? "," : "") << table.columns[i];
    }
    out << '\n';
    for (const Json& row : table.rows) {
      for (std::size_t i = 0; i < table.columns.size(); ++i) {
        out << (i ? "," : "") << csv_cell(row.at(table.columns[i]));
      }
      out << '\n';
    }
    return;
  }
  out << header.dump() << '\n';
  for (const Json& row : table.rows) out << row.dump() << '\n';
}

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Local large deviations on subshifts of finite type", "ldplab"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--spec", o.spec_path, "System file (JSON)")->required();
  app.add_option("--out", o.out_path, "Write results to this path");
  app.add_option("--format", o.format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--seed", o.seed, "Random seed (unsigned 64-bit)");
  app.add_option("--threads", o.threads, "Worker thread cap")
      ->check(CLI::NonNegativeNumber);

  const auto with_potential = [&](CLI::App* sub) {
    sub->add_option("--potential", o.potential, "Potential name")->required();
    sub->add_option("--block", o.block, "Recoding block")->check(CLI::NonNegativeNumber);
  };
  const auto with_pair = [&](CLI::App* sub, bool phi_required) {
    sub->add_option("--G", o.g_name, "Potential G")->required();
    auto* phi = sub->add_option("--phi", o.phi_name, "Observable phi");
    if (phi_required) phi->required();
  };
  const auto with_deviation = [&](CLI::App* sub, bool required) {
    auto* iv = sub->add_option("--interval", o.interval, "Interval a:b or [a,b)");
    auto* n = sub->add_option("--n", o.n_range, "Lengths n or start:stop:step");
    if (required) {
      iv->required();
      n->required();
    }
    sub->add_option("--past", o.past, "Past of the leaf's base point");
  };

  with_potential(app.add_subcommand("pressure", "Topological pressure P(phi)"));
  with_potential(app.add_subcommand("gibbs", "Gibbs Markov measure of a potential"));
  with_potential(app.add_subcommand("entropy", "Entropy and integral of the Gibbs measure"));

  auto* qcurve = app.add_subcommand("qcurve", "Q(t) = P(G + t phi) - P(G) and Q'(t)");
  with_pair(qcurve, true);
  qcurve->add_option("--t", o.t_grid, "Grid start:stop:count or list");

  auto* rate = app.add_subcommand("rate", "Scalar rate at one alpha");
  with_pair(rate, true);
  rate->add_option("--alpha", o.alpha, "Target average")->required();

  auto* ratecurve = app.add_subcommand("ratecurve", "Scalar rate on a grid");
  with_pair(ratecurve, true);
  ratecurve->add_option("--alpha", o.alpha_grid, "Grid start:stop:count or list");
  ratecurve->add_option("--points", o.points, "Interior grid size")
      ->check(CLI::PositiveNumber);

  auto* audit = app.add_subcommand("leaf-audit", "Conditional Gibbs ratio audit");
  audit->add_option("--G", o.g_name, "Potential G")->required();
  audit->add_option("--past", o.past, "Past of the leaf's base point");
  audit->add_option("--n-max", o.n_max, "Largest n")->check(CLI::PositiveNumber);
  audit->add_option("--r", o.r_list, "Radius exponents (list or range)");

  auto* growth = app.add_subcommand("growth", "Finite-n growth on a leaf vs Q(phi)");
  with_pair(growth, true);
  growth->add_option("--n", o.n_range, "Lengths");
  growth->add_option("--past", o.past, "Past of the leaf's base point");

  auto* exact = app.add_subcommand("deviation-exact", "Exact deviation masses");
  with_pair(exact, true);
  with_deviation(exact, true);
  exact->add_option("--mode", o.mode, "auto, enumerate or dp");
  exact->add_option("--bin-width", o.bin_width, "Bin width for non-lattice potentials")
      ->check(CLI::PositiveNumber);

  auto* mc = app.add_subcommand("deviation-mc", "Monte Carlo deviation masses");
  with_pair(mc, true);
  with_deviation(mc, true);
  mc->add_option("--samples", o.samples, "Sample count")->check(CLI::PositiveNumber);
  mc->add_option("--tilt", o.tilt, "none, auto or a number");

  auto* fit = app.add_subcommand("fit", "Rate extrapolation of a deviation series");
  fit->add_option("--G", o.g_name, "Potential G");
  fit->add_option("--phi", o.phi_name, "Observable phi");
  with_deviation(fit, false);
  fit->add_option("--series", o.series_path, "CSV with columns n and mass");
  fit->add_option("--mode", o.mode, "auto, enumerate or dp");

  auto* axioms = app.add_subcommand("axioms", "Check the Smale space axioms");
  axioms->add_option("--samples", o.samples, "Random triples")
      ->check(CLI::PositiveNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  if (command == "axioms" && o.samples == 100000) o.samples = 1000;

  try {
    const SystemFile file = load_spec(o.spec_path);
    Json params;
    Table table = run_command(command, file, o, params);
    Json header;
    header["ldplab"] = LDPLAB_VERSION;
    header["command"] = command;
    header["spec"] = o.spec_path;
    header["spec_hash"] = "fnv1a:" + hex64(file.content_hash);
    header["seed"] = o.seed;
    header["params"] = params;
    if (o.out_path.empty()) {
      emit(out, header, table, o.format);
    } else {
      std::ofstream file_out(o.out_path, std::ios::binary);
      if (!file_out) throw Error(ErrorKind::InvalidArgument, "cannot write " + o.out_path);
      emit(file_out, header, table, o.format);
    }
  } catch (const Error& e) {
    Json record;
    record["error"] = std::string(to_string(e.kind()));
    if (e.cause()) record["cause"] = std::string(to_string(*e.cause()));
    record["message"] = e.what();
    err << record.dump() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    Json record{{"error", "InvalidArgument"}, {"message", e.what()}};
    err << record.dump() << '\n';
    return 1;
  } catch (const std::out_of_range& e) {
    Json record{{"error", "InvalidArgument"}, {"message", e.what()}};
    err << record.dump() << '\n';
    return 1;
  }
  return 0;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace ldplab::cli
