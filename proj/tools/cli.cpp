#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <csignal>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>
#include <pthread.h>

#include "texmesh/csv.hpp"
#include "texmesh/distortion_lab.hpp"
#include "texmesh/errors.hpp"
#include "texmesh/evaluation_bench.hpp"
#include "texmesh/geometry_metrics.hpp"
#include "texmesh/image_io.hpp"
#include "texmesh/mesh_io.hpp"
#include "texmesh/quality_fusion.hpp"
#include "texmesh/study_server.hpp"
#include "texmesh/study_store.hpp"
#include "texmesh/subjective_engine.hpp"
#include "texmesh/texture_metrics.hpp"

namespace texmesh::cli {
namespace {

using nlohmann::json;

// Missing inputs and bad flag values; reported with exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_text(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return {bytes.begin(), bytes.end()};
}

double read_alpha_file(const std::filesystem::path& path) {
  const auto text = read_text(path);
  try {
    const auto j = json::parse(text);
    if (j.is_number()) return j.get<double>();
    if (j.is_object() && j.contains("alpha") && j.at("alpha").is_number()) return j.at("alpha").get<double>();
  } catch (const json::exception&) {
  }
  throw UsageError("alpha file '" + path.string() + "' holds neither a number nor an {\"alpha\": ...} record");
}

std::string fixed(double v) { return fmt::format("{:.6f}", v); }

// ---------------------------------------------------------------- metric

struct MetricArgs {
  std::string reference, distorted;
  std::string geometry = "sdcd", texture = "ms-ssim";
  std::optional<double> alpha;
  std::string alpha_file;
};

int cmd_metric(const MetricArgs& a, const std::string& format, std::ostream& out) {
  if (a.geometry != "sdcd" && a.geometry != "rmse") throw UsageError("--geometry must be sdcd or rmse");
  const auto texture_metric = parse_texture_metric(a.texture);
  std::optional<double> alpha = a.alpha;
  if (!a.alpha_file.empty()) alpha = read_alpha_file(a.alpha_file);
  if (alpha && !(*alpha >= 0.0 && *alpha <= 1.0)) throw UsageError("alpha must lie in [0, 1]");

  const auto reference = load_obj(a.reference);
  const auto distorted = load_obj(a.distorted);

  json r = {{"reference", a.reference}, {"distorted", a.distorted}, {"geometry_metric", a.geometry},
            {"texture_metric", a.texture}};
  const double q_g = a.geometry == "sdcd" ? sdcd(distorted, reference).similarity : geometry_rmse(distorted, reference);
  r["q_g"] = q_g;
  std::optional<double> q_t;
  json textures = json::array();
  if (!reference.textures.empty() || !distorted.textures.empty()) {
    const auto tq = texture_quality(distorted.textures, reference.textures, texture_metric);
    for (const auto& e : tq.per_texture) textures.push_back({{"texture", e.texture}, {"value", e.value}});
    q_t = tq.aggregate;
  }
  r["q_t"] = q_t ? json(*q_t) : json();
  r["textures"] = textures;
  if (alpha) {
    r["alpha"] = *alpha;
    r["cm"] = q_t ? json(combine(q_g, *q_t, *alpha)) : json();
  }

  if (format == "json") {
    out << r.dump() << "\n";
    return 0;
  }
  out << fmt::format("q_g ({})  {}\n", a.geometry, fixed(q_g));
  out << fmt::format("q_t ({})  {}\n", a.texture, q_t ? fixed(*q_t) : std::string("n/a"));
  for (const auto& t : textures)
    out << fmt::format("  texture {}  {}\n", t["texture"].get<std::size_t>(), fixed(t["value"].get<double>()));
  if (alpha) out << fmt::format("CM (alpha {})  {}\n", *alpha, q_t ? fixed(combine(q_g, *q_t, *alpha)) : "n/a");
  return 0;
}

// ---------------------------------------------------------------- distort

int cmd_distort(const std::string& input, const std::string& spec_text, const std::string& output,
                const std::string& format, std::ostream& out) {
  DistortionSpec spec;
  try {
    spec = DistortionSpec::parse(spec_text);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const auto mesh = load_obj(input);
  const auto result = apply_distortion(mesh, spec);
  save_textured_obj(result, output);

  json side = {{"input", input}, {"output", output}, {"spec", spec.to_string()}, {"vertices", result.vertices.size()},
               {"triangles", result.triangles.size()}};
  json tex = json::array();
  for (const auto& t : result.textures) tex.push_back({{"width", t.width}, {"height", t.height}});
  side["textures"] = tex;
  std::ofstream(output + ".json") << side.dump(2) << "\n";

  if (format == "json") {
    out << side.dump() << "\n";
  } else {
    out << fmt::format("wrote {} ({} vertices, {} triangles) with {}\n", output, result.vertices.size(),
                       result.triangles.size(), spec.to_string());
  }
  return 0;
}

// ---------------------------------------------------------------- fit-alpha

int cmd_fit_alpha(const std::string& scores, const std::string& heldout, const std::string& format,
                  std::ostream& out) {
  const auto data = load_score_csv(scores);
  std::vector<AlphaFit> fits;
  if (heldout.empty()) {
    fits = cross_validate_alpha(data);
  } else {
    fits.push_back(fit_alpha(data, heldout));
  }
  double mean = 0.0;
  for (const auto& f : fits) mean += f.alpha;
  mean /= static_cast<double>(fits.size());

  if (format == "json") {
    json folds = json::array();
    for (const auto& f : fits)
      folds.push_back({{"heldout", f.heldout_model}, {"alpha", f.alpha}, {"training_spearman", f.training_spearman}});
    out << json{{"folds", folds}, {"alpha", mean}}.dump() << "\n";
    return 0;
  }
  out << fmt::format("{:<20} {:>8} {:>10}\n", "held-out model", "alpha", "train r_s");
  for (const auto& f : fits)
    out << fmt::format("{:<20} {:>8.3f} {:>10.4f}\n", f.heldout_model, f.alpha, f.training_spearman);
  out << fmt::format("{:<20} {:>8.3f}\n", "mean", mean);
  return 0;
}

// ---------------------------------------------------------------- evaluate

int cmd_evaluate(const std::string& path, std::vector<std::string> metrics, std::optional<double> alpha,
                 const std::string& format, std::ostream& out) {
  const CsvTable table(read_text(path));
  for (const char* col : {"model", "subjective"})
    if (!table.has_column(col)) throw UsageError(fmt::format("'{}' lacks the '{}' column", path, col));
  if (metrics.empty())
    for (const auto& c : table.columns())
      if (c != "model" && c != "stimulus" && c != "subjective") metrics.push_back(c);
  for (const auto& m : metrics)
    if (!table.has_column(m)) throw UsageError(fmt::format("'{}' lacks the '{}' column", path, m));
  if (alpha && (!table.has_column("q_g") || !table.has_column("q_t")))
    throw UsageError("--alpha needs q_g and q_t columns");
  if (metrics.empty() && !alpha) throw UsageError("no objective columns to evaluate");

  std::vector<std::pair<std::string, MetricReport>> rows;
  auto series = [&](auto objective) {
    std::vector<MetricSample> s;
    for (std::size_t r = 0; r < table.rows(); ++r)
      s.push_back({table.at(r, "model"), table.has_column("stimulus") ? table.at(r, "stimulus") : std::to_string(r),
                   objective(r), table.number(r, "subjective")});
    return s;
  };
  for (const auto& m : metrics) rows.emplace_back(m, evaluate_metric(series([&](std::size_t r) { return table.number(r, m); })));
  if (alpha)
    rows.emplace_back(fmt::format("CM(alpha={})", *alpha),
                      evaluate_metric(series([&](std::size_t r) {
                        return combine(table.number(r, "q_g"), table.number(r, "q_t"), *alpha);
                      })));

  if (format == "json") {
    json all = json::array();
    for (const auto& [name, rep] : rows) {
      json models = json::array();
      for (const auto& m : rep.models)
        models.push_back({{"model", m.model}, {"stimuli", m.stimuli}, {"r_p", m.pearson}, {"r_s", m.spearman},
                          {"rmse", m.rmse}});
      all.push_back({{"metric", name}, {"models", models}, {"average",
                     {{"r_p", rep.average_pearson}, {"r_s", rep.average_spearman}, {"rmse", rep.average_rmse}}}});
    }
    out << json{{"metrics", all}}.dump() << "\n";
    return 0;
  }
  out << format_report_table(rows);
  return 0;
}

// ---------------------------------------------------------------- score

Ranking read_ranking(const std::filesystem::path& path) {
  const auto text = read_text(path);
  std::istringstream in(text);
  std::string first;
  std::getline(in, first);
  if (first.rfind("stimulus,", 0) == 0 || first.rfind("\xEF\xBB\xBFstimulus,", 0) == 0) {
    const CsvTable table(text);
    std::vector<std::pair<double, std::string>> rows;
    for (std::size_t r = 0; r < table.rows(); ++r) rows.emplace_back(table.number(r, "rank"), table.at(r, "stimulus"));
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    Ranking out;
    for (auto& r : rows) out.push_back(std::move(r.second));
    return out;
  }
  Ranking out;
  std::istringstream lines(text);
  for (std::string line; std::getline(lines, line);) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
    const auto start = line.find_first_not_of(" \t");
    if (start == std::string::npos || line[start] == '#') continue;
    out.push_back(line.substr(start));
  }
  return out;
}

int cmd_score(const std::vector<std::string>& files, const std::string& csv_out, const std::string& format,
              std::ostream& out) {
  std::vector<Ranking> rankings;
  for (const auto& f : files) rankings.push_back(read_ranking(f));
  const auto matrix = preference_matrix(rankings);
  const auto scores = vote_scores(matrix);
  const auto scale = thurstone_case_v(matrix);
  std::optional<ConcordanceResult> w;
  if (rankings.size() >= 2 && matrix.size() >= 3) w = kendalls_w(rankings);
  if (!csv_out.empty()) {
    std::ofstream f(csv_out, std::ios::binary);
    if (!f) throw Error("cannot write '" + csv_out + "'");
    f << scores_csv(scores);
  }

  std::vector<std::size_t> order(matrix.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores.scores[a] > scores.scores[b]; });
  if (format == "json") {
    json stim = json::array();
    for (std::size_t r = 0; r < order.size(); ++r)
      stim.push_back({{"id", matrix.stimuli[order[r]]}, {"rank", r + 1}, {"score", scores.scores[order[r]]},
                      {"thurstone", scale[order[r]]}});
    json j = {{"subjects", rankings.size()}, {"stimuli", stim}};
    j["kendall"] = w ? json{{"w", w->w}, {"chi_square", w->chi_square}, {"p_value", w->p_value}} : json();
    out << j.dump() << "\n";
    return 0;
  }
  out << fmt::format("subjects {}  stimuli {}\n", rankings.size(), matrix.size());
  if (w) out << fmt::format("Kendall W {:.6f}  chi2 {:.4f}  p {:.3g}\n", w->w, w->chi_square, w->p_value);
  out << fmt::format("{:<16} {:>5} {:>10} {:>10}\n", "stimulus", "rank", "score", "thurstone");
  for (std::size_t r = 0; r < order.size(); ++r)
    out << fmt::format("{:<16} {:>5} {:>10.4f} {:>10.4f}\n", matrix.stimuli[order[r]], r + 1, scores.scores[order[r]],
                       scale[order[r]]);
  return 0;
}

// ---------------------------------------------------------------- simulate-study

std::pair<int, int> parse_design(const std::string& text) {
  const auto x = text.find('x');
  try {
    if (x != std::string::npos) {
      std::size_t used = 0;
      const int types = std::stoi(text.substr(0, x), &used);
      if (used == x) {
        const auto rest = text.substr(x + 1);
        const int levels = std::stoi(rest, &used);
        if (used == rest.size() && types >= 1 && levels >= 1) return {types, levels};
      }
    }
  } catch (const std::exception&) {
  }
  throw UsageError("--design must look like 5x4");
}

int cmd_simulate(const std::string& design_text, const std::string& mode_text, int sessions, double p,
                 std::uint64_t seed, const std::string& format, std::ostream& out) {
  const auto [types, levels] = parse_design(design_text);
  if (sessions < 1) throw UsageError("--sessions must be >= 1");
  if (!(p >= 0.0 && p <= 1.0)) throw UsageError("--p must lie in [0, 1]");
  SortMode mode;
  try {
    mode = parse_sort_mode(mode_text);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  std::vector<std::string> names;
  for (int t = 0; t < types; ++t) names.push_back(types <= 26 ? std::string(1, static_cast<char>('A' + t)) : fmt::format("T{}_", t));
  const auto design = StudyDesign::grid(names, levels);

  std::mt19937_64 rng(seed);
  std::vector<double> counts;
  std::size_t exact = 0;
  double rho_total = 0.0;
  std::vector<double> truth_pos, found_pos;
  for (int i = 0; i < sessions; ++i) {
    std::vector<StimulusId> truth;
    if (mode == SortMode::interleave) {
      std::vector<std::size_t> slots;
      for (std::size_t c = 0; c < design.chains.size(); ++c) slots.insert(slots.end(), design.chains[c].size(), c);
      for (std::size_t k = slots.size(); k > 1; --k) std::swap(slots[k - 1], slots[rng() % k]);
      std::vector<std::size_t> next(design.chains.size(), 0);
      for (auto c : slots) truth.push_back(design.chains[c][next[c]++]);
    } else {
      truth = design.stimuli;
      for (std::size_t k = truth.size(); k > 1; --k) std::swap(truth[k - 1], truth[rng() % k]);
    }
    auto session = SortSession::create(mode, design, rng());
    SimulatedObserver observer(truth, p, rng());
    run_session(session, observer);
    counts.push_back(static_cast<double>(session.comparisons()));
    const auto ranking = session.ranking();
    if (ranking == truth) ++exact;
    if (truth.size() >= 3) {
      std::map<StimulusId, double> pos;
      for (std::size_t k = 0; k < ranking.size(); ++k) pos[ranking[k]] = static_cast<double>(k);
      truth_pos.clear();
      found_pos.clear();
      for (std::size_t k = 0; k < truth.size(); ++k) {
        truth_pos.push_back(static_cast<double>(k));
        found_pos.push_back(pos.at(truth[k]));
      }
      rho_total += spearman(truth_pos, found_pos);
    }
  }
  const double n = static_cast<double>(sessions);
  const double mean = std::accumulate(counts.begin(), counts.end(), 0.0) / n;
  double var = 0.0;
  for (double c : counts) var += (c - mean) * (c - mean);
  const double sd = sessions > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
  const auto [mn, mx] = std::minmax_element(counts.begin(), counts.end());
  const double exact_rate = static_cast<double>(exact) / n;
  const double rho = truth_pos.empty() ? 1.0 : rho_total / n;

  if (format == "json") {
    out << json{{"design", design_text}, {"mode", std::string(to_string(mode))}, {"sessions", sessions}, {"p", p},
                {"seed", seed}, {"comparisons", {{"mean", mean}, {"sd", sd}, {"min", *mn}, {"max", *mx}}},
                {"exact_recovery", exact_rate}, {"mean_spearman", rho}}
               .dump()
        << "\n";
    return 0;
  }
  out << fmt::format("{} sessions, {} design, {} sorter, p = {}\n", sessions, design_text, to_string(mode), p);
  out << fmt::format("comparisons  mean {:.3f}  sd {:.3f}  min {}  max {}\n", mean, sd, *mn, *mx);
  out << fmt::format("exact recovery {:.4f}  mean Spearman {:.4f}\n", exact_rate, rho);
  return 0;
}

// ---------------------------------------------------------------- serve

int cmd_serve(const std::string& host, int port, const std::string& data_dir, const std::string& media_dir,
              const std::string& token, std::ostream& out, std::ostream& err) {
  std::filesystem::create_directories(data_dir);
  StudyStore::Options opts;
  opts.log_path = std::filesystem::path(data_dir) / "events.log";
  if (!media_dir.empty()) {
    if (!std::filesystem::is_directory(media_dir)) throw UsageError("media directory '" + media_dir + "' not found");
    opts.media_root = media_dir;
  }
  StudyStore store(opts);
  for (const auto& w : store.recovery_warnings()) err << "warning: " << w << "\n";
  StudyServer server(store, {opts.media_root, token});
  const int bound = server.bind(host, port);
  out << fmt::format("listening on {}:{} (log {})\n", host, bound, opts.log_path.string()) << std::flush;

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  server.run();
  // unblock the waiter if the server stopped on its own
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Perceptual quality tools for textured meshes"};
  app.require_subcommand(1);
  std::string format = "text";
  app.add_option("--format", format, "Output form")->check(CLI::IsMember({"text", "json"}));

  MetricArgs metric;
  auto* m = app.add_subcommand("metric", "Geometry, texture and combined quality of a distorted mesh");
  m->add_option("reference", metric.reference, "Reference OBJ")->required();
  m->add_option("distorted", metric.distorted, "Distorted OBJ")->required();
  m->add_option("--geometry", metric.geometry, "sdcd or rmse");
  m->add_option("--texture", metric.texture, "ms-ssim, ssim or rmse");
  auto* alpha_opt = m->add_option("--alpha", metric.alpha, "Weight of q_g in CM");
  m->add_option("--alpha-file", metric.alpha_file, "File holding alpha")->excludes(alpha_opt);
  m->add_option("--format", format, "Output form")->check(CLI::IsMember({"text", "json"}));

  std::string d_input, d_spec, d_output;
  auto* d = app.add_subcommand("distort", "Apply one distortion spec");
  d->add_option("input", d_input, "Input OBJ")->required();
  d->add_option("spec", d_spec, "e.g. quantize:7, smooth:50, subsample:3, jpeg:6, external:x.obj")->required();
  d->add_option("output", d_output, "Output OBJ")->required();
  d->add_option("--format", format, "Output form")->check(CLI::IsMember({"text", "json"}));

  std::string scores_path, heldout;
  auto* f = app.add_subcommand("fit-alpha", "Leave-one-model-out fit of the CM weight");
  f->add_option("scores", scores_path, "CSV: model, stimulus, q_g, q_t, subjective")->required();
  f->add_option("--heldout", heldout, "Fit a single fold");
  f->add_option("--format", format, "Output form")->check(CLI::IsMember({"text", "json"}));

  std::string eval_path;
  std::vector<std::string> eval_metrics;
  std::optional<double> eval_alpha;
  auto* e = app.add_subcommand("evaluate", "Per-model Pearson, Spearman and RMSE of objective columns");
  e->add_option("scores", eval_path, "CSV with model, subjective and objective columns")->required();
  e->add_option("--metric", eval_metrics, "Objective column (repeatable; default all)");
  e->add_option("--alpha", eval_alpha, "Also evaluate CM from q_g and q_t");
  e->add_option("--format", format, "Output form")->check(CLI::IsMember({"text", "json"}));

  std::vector<std::string> ranking_files;
  std::string score_csv;
  auto* s = app.add_subcommand("score", "Vote scores, Kendall's W and Thurstone values from rankings");
  s->add_option("rankings", ranking_files, "One ranking per file, best first")->required();
  s->add_option("--output", score_csv, "Write stimulus,rank,score CSV");
  s->add_option("--format", format, "Output form")->check(CLI::IsMember({"text", "json"}));

  std::string sim_design = "5x4", sim_mode = "interleave";
  int sim_sessions = 10000;
  double sim_p = 1.0;
  std::uint64_t sim_seed = 1;
  auto* sim = app.add_subcommand("simulate-study", "Run sorters against synthetic observers");
  sim->add_option("--design", sim_design, "TYPESxLEVELS");
  sim->add_option("--mode", sim_mode, "interleave or bst");
  sim->add_option("--sessions", sim_sessions, "Number of sessions");
  sim->add_option("--p", sim_p, "Probability of choosing the truly better stimulus");
  sim->add_option("--seed", sim_seed, "Generator seed");
  sim->add_option("--format", format, "Output form")->check(CLI::IsMember({"text", "json"}));

  std::string host = "127.0.0.1", data_dir, media_dir, token;
  int port = 8080;
  auto* srv = app.add_subcommand("serve", "Host paired-comparison studies over HTTP");
  srv->add_option("--host", host, "Bind address");
  srv->add_option("--port", port, "Port; 0 picks one");
  srv->add_option("--data", data_dir, "Directory for the event log")->required();
  srv->add_option("--media", media_dir, "Directory served under /media");
  srv->add_option("--token", token, "Shared study token");

  std::vector<const char*> argv{"texmesh"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& ex) {
    err << "error: " << ex.what() << "\n";
    return 2;
  }

  try {
    if (m->parsed()) return cmd_metric(metric, format, out);
    if (d->parsed()) return cmd_distort(d_input, d_spec, d_output, format, out);
    if (f->parsed()) return cmd_fit_alpha(scores_path, heldout, format, out);
    if (e->parsed()) return cmd_evaluate(eval_path, eval_metrics, eval_alpha, format, out);
    if (s->parsed()) return cmd_score(ranking_files, score_csv, format, out);
    if (sim->parsed()) return cmd_simulate(sim_design, sim_mode, sim_sessions, sim_p, sim_seed, format, out);
    if (srv->parsed()) return cmd_serve(host, port, data_dir, media_dir, token, out, err);
  } catch (const UsageError& ex) {
    err << "error: " << ex.what() << "\n";
    return 2;
  } catch (const ResolutionError& ex) {
    err << "error: " << ex.what() << "\n";
    return 2;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace texmesh::cli
