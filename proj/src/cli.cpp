#include "loopkit/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "loopkit/errors.hpp"
#include "loopkit/pipeline.hpp"
#include "loopkit/servo.hpp"
#include "loopkit/service.hpp"

namespace loopkit {

namespace fs = std::filesystem;

namespace {

struct EncodeArgs {
  std::string labels, catalog, out;
  double theta_hat = 10.0;
};

struct DecodeArgs {
  std::string preds, catalog, out;
  double theta_hat = 10.0;
  double min_confidence = 0.0;
};

struct PropagateArgs {
  std::string manifest, seed, previous, matches, out, dropped;
  std::size_t from_frame = 0;
  PropagationSettings settings;
};

struct EvalArgs {
  std::string gt, pred, catalog, out, csv;
  double theta_hat = 10.0;
  double conf = 0.5;
};

struct ServoArgs {
  double theta0 = 0.0;
  bool symmetric = false;
  std::vector<double> gains{1.0, 1.0};
  std::vector<double> offset{100.0, 60.0};
  double dt = 0.05;
  std::size_t max_steps = 10000;
  std::string out;
};

struct ServeArgs {
  std::string store, host = "127.0.0.1", cors = "*";
  int port = 8080;
};

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void run_encode(const EncodeArgs& a, std::ostream& out) {
  const AngleQuantizer q = AngleQuantizer::from_degrees(a.theta_hat);
  std::optional<ObjectCatalog> catalog;
  if (!a.catalog.empty()) catalog = read_catalog(a.catalog);
  std::vector<PredFrame> frames;
  std::size_t count = 0;
  for (const auto& f : read_labels_jsonl(a.labels)) {
    PredFrame pf{f.frame, {}};
    for (const auto& l : f.labels) {
      if (catalog && !catalog->contains(l.class_id))
        throw UnknownClass("class " + std::to_string(l.class_id) + " is not in the catalog");
      pf.preds.push_back(encode_label(q, l));
    }
    count += pf.preds.size();
    frames.push_back(std::move(pf));
  }
  write_preds_jsonl(a.out, frames);
  out << Json{{"frames", frames.size()}, {"labels", count}, {"k", q.k()}}.dump() << "\n";
}

void run_decode(const DecodeArgs& a, std::ostream& out) {
  const AngleQuantizer q = AngleQuantizer::from_degrees(a.theta_hat);
  const ObjectCatalog catalog = read_catalog(a.catalog);
  std::vector<LabelFrame> frames;
  std::size_t count = 0;
  for (const auto& f : read_preds_jsonl(a.preds)) {
    LabelFrame lf{f.frame, {}};
    for (const auto& p : f.preds)
      if (p.confidence >= a.min_confidence) lf.labels.push_back(decode_prediction(q, catalog, p));
    count += lf.labels.size();
    frames.push_back(std::move(lf));
  }
  write_labels_jsonl(a.out, frames, true);
  out << Json{{"frames", frames.size()}, {"labels", count}}.dump() << "\n";
}

int run_propagate(const PropagateArgs& a, std::ostream& out, std::ostream& err, bool json_errors) {
  PropagateRequest req;
  req.manifest = read_manifest(a.manifest);
  req.base_dir = fs::path(a.manifest).parent_path();
  req.from_frame = a.from_frame;
  req.settings = a.settings;
  const auto seeds = read_labels_jsonl(a.seed);
  for (const auto& f : seeds)
    if (f.frame == a.from_frame) req.seed = f.labels;
  if (req.seed.empty() && seeds.size() == 1) req.seed = seeds.front().labels;
  if (req.seed.empty())
    throw InvalidArgument("seed file has no labels for frame " + std::to_string(a.from_frame));
  if (!a.previous.empty()) req.previous = read_labels_jsonl(a.previous);
  if (!a.matches.empty()) req.matches = read_matches_jsonl(a.matches);

  const PropagateOutcome result = run_propagation(req);
  write_text(a.out, labels_jsonl(result.frames));
  if (!a.dropped.empty()) {
    Json arr = Json::array();
    for (const auto& d : result.dropped) arr.push_back({{"frame", d.frame}, {"seed_index", d.seed_index}});
    write_text(a.dropped, arr.dump() + "\n");
  }
  Json summary{{"frames", result.frames.size()}, {"dropped", result.dropped.size()}};
  if (result.broken_at) {
    summary["broken_at"] = *result.broken_at;
    out << summary.dump() << "\n";
    if (json_errors)
      err << Json{{"error", "PropagationBroken"}, {"message", result.error},
                  {"broken_at", *result.broken_at}}.dump()
          << "\n";
    else
      err << "error: " << result.error << "\n";
    return kExitFailure;
  }
  out << summary.dump() << "\n";
  return kExitOk;
}

void run_eval(const EvalArgs& a, std::ostream& out) {
  const AngleQuantizer q = AngleQuantizer::from_degrees(a.theta_hat);
  const ObjectCatalog catalog = read_catalog(a.catalog);
  std::map<std::size_t, EvalFrame> by_frame;
  for (auto& f : read_labels_jsonl(a.gt)) {
    auto& slot = by_frame[f.frame].ground_truth;
    slot.insert(slot.end(), f.labels.begin(), f.labels.end());
  }
  for (auto& f : read_preds_jsonl(a.pred)) {
    auto& slot = by_frame[f.frame].predictions;
    slot.insert(slot.end(), f.preds.begin(), f.preds.end());
  }
  std::vector<EvalFrame> frames;
  for (auto& [_, f] : by_frame) frames.push_back(std::move(f));
  EvalOptions options;
  options.operating_threshold = a.conf;
  const EvalReport report = evaluate(frames, q, catalog, options);
  write_text(a.out, report_to_json(report).dump(2) + "\n");
  if (!a.csv.empty()) write_text(a.csv, report_to_csv(report));
  out << Json{{"frames", frames.size()}, {"map", report.map}}.dump() << "\n";
}

void run_servo(const ServoArgs& a, std::ostream& out) {
  if (a.gains.size() != 2) throw InvalidArgument("--gains takes K_t,K_theta");
  if (a.offset.size() != 2) throw InvalidArgument("--offset takes dx,dy");
  ServoState s;
  s.target.position = {a.offset[0], a.offset[1]};
  s.target.theta = wrap_angle(deg_to_rad(a.theta0));
  Gains gains;
  gains.translation = a.gains[0];
  gains.rotation = a.gains[1];
  gains.dt = a.dt;
  const Trajectory traj = simulate(s, gains, a.symmetric, a.max_steps);

  std::string csv = "step,ex,ey,theta_deg,e_theta\n";
  for (const auto& smp : traj.samples)
    csv += std::to_string(smp.step) + "," + fixed(smp.error.x, 6) + "," + fixed(smp.error.y, 6) +
           "," + fixed(rad_to_deg(smp.theta), 6) + "," + fixed(smp.e_theta, 9) + "\n";
  write_text(a.out, csv);
  const double final_theta = traj.samples.back().theta;
  out << Json{{"converged", traj.converged},
              {"steps", traj.steps},
              {"final_theta_deg", rad_to_deg(final_theta)},
              {"final_error_px", traj.samples.back().error.norm()}}
             .dump()
      << "\n";
}

void run_serve(const ServeArgs& a, std::ostream& out) {
  Service service(a.store, a.cors);
  const int port = service.bind(a.host, a.port);
  out << "listening on http://" << a.host << ":" << port << std::endl;
  service.listen();
}

void report_error(std::ostream& err, bool json, const std::string& kind, const std::string& msg) {
  if (json)
    err << Json{{"error", kind}, {"message", msg}}.dump() << "\n";
  else
    err << "error: " << msg << "\n";
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const bool json_errors = std::find(args.begin(), args.end(), "--json") != args.end();

  CLI::App app{"loopkit: oriented-label tooling for closed-loop grasping", "loopkit"};
  app.set_help_all_flag("--help-all");
  app.require_subcommand(1);
  bool json_flag = false;
  app.add_flag("--json", json_flag, "Print errors as JSON on stderr");

  EncodeArgs enc;
  auto* encode = app.add_subcommand("encode", "Oriented labels to expanded-class boxes");
  encode->add_option("--labels", enc.labels, "labels.jsonl")->required()->check(CLI::ExistingFile);
  encode->add_option("--catalog", enc.catalog, "catalog.json (optional class check)")
      ->check(CLI::ExistingFile);
  encode->add_option("--theta-hat", enc.theta_hat, "Angle bin width, degrees")->capture_default_str();
  encode->add_option("--out", enc.out, "preds.jsonl")->required();

  DecodeArgs dec;
  auto* decode = app.add_subcommand("decode", "Expanded-class boxes to oriented labels");
  decode->add_option("--preds", dec.preds, "preds.jsonl")->required()->check(CLI::ExistingFile);
  decode->add_option("--catalog", dec.catalog, "catalog.json")->required()->check(CLI::ExistingFile);
  decode->add_option("--theta-hat", dec.theta_hat, "Angle bin width, degrees")->capture_default_str();
  decode->add_option("--min-confidence", dec.min_confidence)->capture_default_str();
  decode->add_option("--out", dec.out, "labels.jsonl")->required();

  PropagateArgs prop;
  auto* propagate = app.add_subcommand("propagate", "Propagate seed labels through a sequence");
  propagate->add_option("--manifest", prop.manifest)->required()->check(CLI::ExistingFile);
  propagate->add_option("--seed", prop.seed, "labels.jsonl with the seed frame")
      ->required()
      ->check(CLI::ExistingFile);
  propagate->add_option("--from-frame", prop.from_frame)->capture_default_str();
  propagate->add_option("--previous", prop.previous, "labels kept for frames before --from-frame")
      ->check(CLI::ExistingFile);
  propagate->add_option("--matches", prop.matches, "precomputed matches.jsonl")
      ->check(CLI::ExistingFile);
  propagate->add_option("--out", prop.out, "labels.jsonl")->required();
  propagate->add_option("--dropped", prop.dropped, "JSON list of labels that left the frame");
  propagate->add_option("--iterations", prop.settings.ransac.iterations)->capture_default_str();
  propagate->add_option("--inlier-threshold", prop.settings.ransac.inlier_threshold, "px")
      ->capture_default_str();
  propagate->add_option("--ransac-seed", prop.settings.ransac.seed)->capture_default_str();
  propagate->add_option("--search-radius", prop.settings.matcher.search_radius, "px")
      ->capture_default_str();
  propagate->add_option("--threads", prop.settings.threads, "0 = hardware concurrency");

  SynthOptions syn;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Render a synthetic labelled sequence");
  synth->add_option("--out-dir", synth_out)->required();
  synth->add_option("--frames", syn.frames)->capture_default_str();
  synth->add_option("--width", syn.width)->capture_default_str();
  synth->add_option("--height", syn.height)->capture_default_str();
  synth->add_option("--rotation-deg", syn.rotation_deg, "per frame")->capture_default_str();
  synth->add_option("--scale", syn.scale, "per frame")->capture_default_str();
  synth->add_option("--jitter", syn.jitter, "px per frame")->capture_default_str();
  synth->add_option("--objects", syn.objects)->capture_default_str();
  synth->add_option("--sprite-length", syn.sprite_length, "px")->capture_default_str();
  synth->add_option("--seed", syn.seed)->capture_default_str();
  synth->add_flag("!--no-images", syn.write_images, "Skip writing frame PNGs");
  synth->add_option("--theta-hat", syn.theta_hat_deg, "Oracle detector bin width, degrees")
      ->capture_default_str();
  synth->add_option("--center-sigma", syn.noise.center_sigma, "px")->capture_default_str();
  synth->add_option("--size-sigma", syn.noise.size_sigma)->capture_default_str();
  synth->add_option("--flip-prob", syn.noise.angle_flip_prob)->capture_default_str();
  synth->add_option("--miss-prob", syn.noise.miss_prob)->capture_default_str();
  synth->add_option("--clutter-rate", syn.noise.clutter_rate)->capture_default_str();
  synth->add_option("--detector-seed", syn.detector_seed)->capture_default_str();

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Score detector output against ground truth");
  eval->add_option("--gt", ev.gt)->required()->check(CLI::ExistingFile);
  eval->add_option("--pred", ev.pred)->required()->check(CLI::ExistingFile);
  eval->add_option("--catalog", ev.catalog)->required()->check(CLI::ExistingFile);
  eval->add_option("--theta-hat", ev.theta_hat, "degrees")->capture_default_str();
  eval->add_option("--conf", ev.conf, "Operating confidence threshold")->capture_default_str();
  eval->add_option("--out", ev.out, "report.json")->required();
  eval->add_option("--csv", ev.csv, "report.csv");

  ServoArgs sv;
  auto* servo = app.add_subcommand("servo", "Simulate the planar visual servo loop");
  servo->add_option("--theta0", sv.theta0, "Initial relative angle, degrees")->required();
  servo->add_flag("--symmetric", sv.symmetric);
  servo->add_option("--gains", sv.gains, "K_t,K_theta")->delimiter(',')->expected(2);
  servo->add_option("--offset", sv.offset, "Initial image error dx,dy in px")
      ->delimiter(',')
      ->expected(2);
  servo->add_option("--dt", sv.dt)->capture_default_str();
  servo->add_option("--max-steps", sv.max_steps)->capture_default_str();
  servo->add_option("--out", sv.out, "traj.csv")->required();

  ServeArgs srv;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--store", srv.store, "Project store directory")->required();
  serve->add_option("--port", srv.port)->capture_default_str();
  serve->add_option("--host", srv.host)->capture_default_str();
  serve->add_option("--cors-origin", srv.cors)->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  } catch (const CLI::ParseError& e) {
    if (json_errors) {
      report_error(err, true, "UsageError", e.what());
    } else {
      err << "error: " << e.what() << "\n\n" << app.help();
    }
    return kExitUsage;
  }

  try {
    if (*encode) run_encode(enc, out);
    if (*decode) run_decode(dec, out);
    if (*propagate) return run_propagate(prop, out, err, json_errors);
    if (*synth) {
      syn.noise.validate();
      const SynthResult r = synthesize(synth_out, syn);
      out << Json{{"frames", r.frames.size()}, {"out_dir", synth_out}}.dump() << "\n";
    }
    if (*eval) run_eval(ev, out);
    if (*servo) run_servo(sv, out);
    if (*serve) run_serve(srv, out);
  } catch (const Error& e) {
    report_error(err, json_errors, e.kind(), e.what());
    return kExitFailure;
  } catch (const std::exception& e) {
    report_error(err, json_errors, "InternalError", e.what());
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace loopkit
