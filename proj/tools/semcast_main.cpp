// semcast: rate-distortion-perception allocation, broadcast rate-region
// bounds, superposition/SIC simulation, disentangling autoencoder training
// and a TCP feature-broadcast harness, behind one binary.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "semcast/channel_sim.hpp"
#include "semcast/checkpoint.hpp"
#include "semcast/harness.hpp"
#include "semcast/rate_region.hpp"
#include "semcast/rdp_allocator.hpp"
#include "semcast/training.hpp"
#include "semcast/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace semcast;

namespace {

std::vector<double> parse_list(const std::string& csv) {
  std::vector<double> out;
  std::istringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  return out;
}

std::vector<int> parse_int_list(const std::string& csv) {
  std::vector<int> out;
  std::istringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
  return out;
}

// "lo:hi:step" inclusive grid
std::vector<double> parse_grid(const std::string& spec) {
  const auto c1 = spec.find(':');
  const auto c2 = spec.find(':', c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos)
    throw CLI::ValidationError("grid", "expected lo:hi:step, got " + spec);
  const double lo = std::stod(spec.substr(0, c1));
  const double hi = std::stod(spec.substr(c1 + 1, c2 - c1 - 1));
  const double step = std::stod(spec.substr(c2 + 1));
  if (!(step > 0.0) || hi < lo) throw CLI::ValidationError("grid", "bad grid " + spec);
  std::vector<double> out;
  for (double v = lo; v <= hi + 0.5 * step; v += step) out.push_back(std::min(v, hi));
  return out;
}

std::uint64_t parse_bitmap(const std::string& s) {
  if (s.rfind("0b", 0) == 0) return std::stoull(s.substr(2), nullptr, 2);
  if (s.rfind("0x", 0) == 0) return std::stoull(s.substr(2), nullptr, 16);
  return std::stoull(s);
}

json schema_to_json(const LatentSchema& schema) {
  json blocks = json::array();
  for (int b = 0; b < schema.n_blocks(); ++b)
    blocks.push_back({{"name", schema.block_name(b)}, {"width", schema.block_width(b)}});
  json sets = json::array();
  for (int u = 0; u < schema.n_users(); ++u) sets.push_back(schema.interest_set(u));
  return {{"blocks", blocks}, {"interest_sets", sets}};
}

LatentSchema schema_from_json(const json& j) {
  std::vector<LatentBlock> blocks;
  for (const auto& b : j.at("blocks"))
    blocks.push_back({b.at("name").get<std::string>(), b.at("width").get<int>()});
  std::vector<std::vector<int>> sets;
  for (const auto& s : j.at("interest_sets")) sets.push_back(s.get<std::vector<int>>());
  return LatentSchema(std::move(blocks), std::move(sets));
}

/// Every run writes its manifest (version, seed, full flag state) before any
/// output, so outputs are reproducible from the manifest alone.
void write_manifest(const fs::path& out_dir, const std::string& subcommand, CLI::App& app,
                    std::uint64_t seed) {
  fs::create_directories(out_dir);
  json manifest;
  manifest["tool"] = "semcast";
  manifest["version"] = kVersion;
  manifest["subcommand"] = subcommand;
  manifest["seed"] = seed;
  manifest["config"] = app.config_to_str(true, false);
  std::ofstream os(out_dir / "manifest.json");
  os << manifest.dump(2) << '\n';
}

Eigen::MatrixXd read_matrix_file(const fs::path& path, int expected_rows) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<double> vals;
    double v;
    while (ls >> v) vals.push_back(v);
    if (!vals.empty()) rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw std::runtime_error("no data rows in " + path.string());
  // each line is one sample vector
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows[0].size()),
                    static_cast<Eigen::Index>(rows.size()));
  for (size_t c = 0; c < rows.size(); ++c) {
    if (rows[c].size() != rows[0].size())
      throw std::runtime_error("ragged rows in " + path.string());
    for (size_t r = 0; r < rows[c].size(); ++r)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[c][r];
  }
  if (expected_rows > 0 && m.rows() != expected_rows)
    throw std::runtime_error("expected " + std::to_string(expected_rows) + " values per row in " +
                             path.string());
  return m;
}

GainPolicy gain_policy_from(const std::string& name, double variance, double min_gain) {
  if (name == "identity") return GainPolicy::identity();
  if (name == "rayleigh") return GainPolicy::rayleigh(variance, min_gain);
  if (name == "rayleigh-signed") return GainPolicy::rayleigh_signed(variance, min_gain);
  throw CLI::ValidationError("gain-policy", "unknown policy " + name);
}

struct DeskConfig {
  std::string cards = "4,4,4";
  int input_dim = 48;
  int hidden_dim = 24;
  int block_width = 4;
  std::uint64_t dataset_seed = 7;

  AttributeDataset dataset() const {
    return AttributeDataset(parse_int_list(cards), input_dim, dataset_seed);
  }
  LatentSchema schema() const {
    const auto c = parse_int_list(cards);
    std::vector<LatentBlock> blocks;
    for (size_t i = 0; i < c.size(); ++i)
      blocks.push_back({"attr" + std::to_string(i), block_width});
    // default interest: user i wants block i (desk-scale two users when possible)
    std::vector<std::vector<int>> sets;
    const int users = std::min<int>(2, static_cast<int>(c.size()));
    for (int u = 0; u < users; ++u) sets.push_back({u});
    return LatentSchema(std::move(blocks), std::move(sets));
  }
  void add_options(CLI::App* cmd) {
    cmd->add_option("--cards", cards, "attribute cardinalities, comma separated");
    cmd->add_option("--input-dim", input_dim, "sample vector dimension");
    cmd->add_option("--hidden", hidden_dim, "hidden layer width");
    cmd->add_option("--block-width", block_width, "latent block width per attribute");
    cmd->add_option("--dataset-seed", dataset_seed, "dataset generation seed");
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semantic broadcast toolkit"};
  app.set_config("--config", "", "structured-text config file; sections per subcommand");
  app.allow_config_extras(false);
  app.require_subcommand(0, 1);

  std::string out_dir = "out";
  std::uint64_t seed = 1;
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--seed", seed, "global seed")->capture_default_str();

  // ---- allocate ----------------------------------------------------------
  auto* cmd_alloc = app.add_subcommand("allocate", "distortion allocation sweep");
  std::string variances = "0.25,0.5,0.75,1.0";
  std::string d_grid = "0.1:2.5:0.05";
  std::string p_grid;
  double p_kl = 0.2;
  double alloc_tol = 1e-9;
  bool bits = false;
  cmd_alloc->add_option("--variances", variances, "source variances")->capture_default_str();
  cmd_alloc->add_option("--d-grid", d_grid, "total distortion grid lo:hi:step")
      ->capture_default_str();
  cmd_alloc->add_option("--p-kl", p_kl, "total perception budget (nats)")->capture_default_str();
  cmd_alloc->add_option("--p-grid", p_grid, "optional perception grid lo:hi:step");
  cmd_alloc->add_option("--tol", alloc_tol, "KKT tolerance")->capture_default_str();
  cmd_alloc->add_flag("--bits", bits, "emit rates in bits instead of nats");

  // ---- region ------------------------------------------------------------
  auto* cmd_region = app.add_subcommand("region", "broadcast rate-region bounds");
  double g1 = 1.0, g2 = 0.5, power = 10.0;
  std::string noise1 = "q1", noise2 = "q1";
  int n_alpha = 101;
  cmd_region->add_option("--g1", g1, "user 1 gain")->capture_default_str();
  cmd_region->add_option("--g2", g2, "user 2 gain")->capture_default_str();
  cmd_region->add_option("--power", power, "total power")->capture_default_str();
  cmd_region->add_option("--noise1", noise1, "noise spec for user 1")->capture_default_str();
  cmd_region->add_option("--noise2", noise2, "noise spec for user 2")->capture_default_str();
  cmd_region->add_option("--n-alpha", n_alpha, "alpha grid points")->capture_default_str();

  // ---- simulate ----------------------------------------------------------
  auto* cmd_sim = app.add_subcommand("simulate", "superposition/SIC Monte Carlo");
  double sim_alpha = 0.3;
  double sim_power = 10.0, sim_g1 = 1.0, sim_g2 = 0.5;
  std::string sim_noise1 = "gaussian:1.0", sim_noise2 = "gaussian:1.0";
  long symbols = 1000000;
  std::string fading = "none";
  bool signed_gains = false;
  double fade1 = 1.0, fade2 = 2.0;
  cmd_sim->add_option("--alpha", sim_alpha, "power split")->capture_default_str();
  cmd_sim->add_option("--power", sim_power, "total power")->capture_default_str();
  cmd_sim->add_option("--g1", sim_g1, "user 1 gain")->capture_default_str();
  cmd_sim->add_option("--g2", sim_g2, "user 2 gain")->capture_default_str();
  cmd_sim->add_option("--noise1", sim_noise1, "noise spec")->capture_default_str();
  cmd_sim->add_option("--noise2", sim_noise2, "noise spec")->capture_default_str();
  cmd_sim->add_option("--symbols", symbols, "symbols per frame")->capture_default_str();
  cmd_sim->add_option("--fading", fading, "none|slow|fast")->capture_default_str();
  cmd_sim->add_flag("--signed-gains", signed_gains, "use signed Gaussian gain draws");
  cmd_sim->add_option("--fade-scale1", fade1, "gain draw variance, user 1")
      ->capture_default_str();
  cmd_sim->add_option("--fade-scale2", fade2, "gain draw variance, user 2")
      ->capture_default_str();

  // ---- train -------------------------------------------------------------
  auto* cmd_train = app.add_subcommand("train", "train the disentangling autoencoder");
  DeskConfig desk_train;
  desk_train.add_options(cmd_train);
  TrainConfig tc;
  double snr_train = -1e9;  // sentinel: not set
  std::string train_noise = "gaussian:1.0";
  std::string gain_policy_name = "identity";
  double gain_var = 1.0, min_gain = 0.3;
  cmd_train->add_option("--steps", tc.steps_per_phase, "cycles (one step per phase each)")
      ->capture_default_str();
  cmd_train->add_option("--lr", tc.learning_rate, "learning rate")->capture_default_str();
  cmd_train->add_option("--batch", tc.batch_size, "batch size")->capture_default_str();
  cmd_train->add_option("--snr-train", snr_train, "training SNR in dB (omit for non-robust)");
  cmd_train->add_option("--noise", train_noise, "training noise spec")->capture_default_str();
  cmd_train->add_option("--gain-policy", gain_policy_name, "identity|rayleigh|rayleigh-signed")
      ->capture_default_str();
  cmd_train->add_option("--gain-var", gain_var, "gain draw variance")->capture_default_str();
  cmd_train->add_option("--min-gain", min_gain, "smallest equalizable gain")
      ->capture_default_str();
  cmd_train->add_option("--clip", tc.clip_norm, "gradient clip norm, 0 disables")
      ->capture_default_str();
  cmd_train->add_option("--momentum", tc.momentum, "momentum, 0 keeps plain GD")
      ->capture_default_str();

  // ---- eval --------------------------------------------------------------
  auto* cmd_eval = app.add_subcommand("eval", "evaluate a trained checkpoint");
  DeskConfig desk_eval;
  desk_eval.add_options(cmd_eval);
  std::string eval_ckpt;
  double eval_snr = -1e9;
  std::string eval_noise = "gaussian:1.0";
  std::string eval_gain_policy = "identity";
  double eval_gain_var = 1.0, eval_min_gain = 0.3;
  int swap_pairs = 200;
  int eval_reps = 50;
  cmd_eval->add_option("--checkpoint", eval_ckpt, "model checkpoint")->required();
  cmd_eval->add_option("--snr", eval_snr, "test SNR in dB (omit for noiseless)");
  cmd_eval->add_option("--noise", eval_noise, "test noise spec")->capture_default_str();
  cmd_eval->add_option("--gain-policy", eval_gain_policy, "identity|rayleigh|rayleigh-signed")
      ->capture_default_str();
  cmd_eval->add_option("--gain-var", eval_gain_var, "gain draw variance")->capture_default_str();
  cmd_eval->add_option("--min-gain", eval_min_gain, "smallest equalizable gain")
      ->capture_default_str();
  cmd_eval->add_option("--swap-pairs", swap_pairs, "pairs per block for swap accuracy")
      ->capture_default_str();
  cmd_eval->add_option("--reps", eval_reps, "channel realizations for MSE/PSNR")
      ->capture_default_str();

  // ---- psnr-sweep --------------------------------------------------------
  auto* cmd_sweep = app.add_subcommand("psnr-sweep", "PSNR vs test SNR for several schemes");
  DeskConfig desk_sweep;
  desk_sweep.add_options(cmd_sweep);
  double snr_from = 0.0, snr_to = 25.0, snr_step = 1.0;
  std::vector<std::string> schemes;
  std::string sweep_noise = "angc";
  std::string sweep_gain_policy = "identity";
  double sweep_gain_var = 1.0, sweep_min_gain = 0.3;
  int sweep_reps = 50;
  cmd_sweep->add_option("--snr-from", snr_from, "first test SNR (dB)")->capture_default_str();
  cmd_sweep->add_option("--snr-to", snr_to, "last test SNR (dB)")->capture_default_str();
  cmd_sweep->add_option("--step", snr_step, "SNR step (dB)")->capture_default_str();
  cmd_sweep->add_option("--scheme", schemes, "name=checkpoint, repeatable")->required();
  cmd_sweep->add_option("--noise", sweep_noise, "test noise spec")->capture_default_str();
  cmd_sweep->add_option("--gain-policy", sweep_gain_policy, "identity|rayleigh|rayleigh-signed")
      ->capture_default_str();
  cmd_sweep->add_option("--gain-var", sweep_gain_var, "gain draw variance")
      ->capture_default_str();
  cmd_sweep->add_option("--min-gain", sweep_min_gain, "smallest equalizable gain")
      ->capture_default_str();
  cmd_sweep->add_option("--reps", sweep_reps, "channel realizations per point")
      ->capture_default_str();

  // ---- serve -------------------------------------------------------------
  auto* cmd_serve = app.add_subcommand("serve", "broadcast encoded features over TCP");
  std::string bind_addr = "127.0.0.1";
  std::uint16_t port = 5600;
  std::string serve_ckpt, serve_schema;
  int serve_frames = 1000, serve_users = 2;
  bool serve_raw = false;
  DeskConfig desk_serve;
  desk_serve.add_options(cmd_serve);
  cmd_serve->add_option("--bind", bind_addr, "bind address")->capture_default_str();
  cmd_serve->add_option("--port", port, "TCP port")->capture_default_str();
  cmd_serve->add_option("--checkpoint", serve_ckpt, "model checkpoint")->required();
  cmd_serve->add_option("--schema", serve_schema, "schema JSON to validate against");
  cmd_serve->add_option("--frames", serve_frames, "frames to send")->capture_default_str();
  cmd_serve->add_option("--users", serve_users, "expected receivers")->capture_default_str();
  cmd_serve->add_flag("--raw", serve_raw, "send raw input vectors instead of features");

  // ---- recv --------------------------------------------------------------
  auto* cmd_recv = app.add_subcommand("recv", "receive, complete and decode features");
  std::string connect_host = "127.0.0.1";
  std::uint16_t recv_port = 5600;
  int recv_user = 0;
  std::string interest = "0b1";
  std::string donor_file, truth_file, recv_ckpt;
  cmd_recv->add_option("--connect", connect_host, "transmitter host")->capture_default_str();
  cmd_recv->add_option("--port", recv_port, "TCP port")->capture_default_str();
  cmd_recv->add_option("--user", recv_user, "user id / decoder index")->capture_default_str();
  cmd_recv->add_option("--interest", interest, "interest bitmap, e.g. 0b101")
      ->capture_default_str();
  cmd_recv->add_option("--donor", donor_file, "knowledge-base donor code file");
  cmd_recv->add_option("--truth", truth_file, "ground-truth samples for PSNR");
  cmd_recv->add_option("--checkpoint", recv_ckpt, "model checkpoint")->required();

  for (CLI::App* sub : {cmd_alloc, cmd_region, cmd_sim, cmd_train, cmd_eval, cmd_sweep,
                        cmd_serve, cmd_recv}) {
    sub->fallthrough();  // global --out/--seed may follow the subcommand
  }

  if (argc <= 1) {
    std::cout << app.help() << std::endl;
    return 2;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help() << std::endl;
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return 2;
  }

  const fs::path out(out_dir);
  try {
    if (*cmd_alloc) {
      write_manifest(out, "allocate", app, seed);
      auto vars = parse_list(variances);
      GaussianSourceSet sources{
          Eigen::Map<Eigen::VectorXd>(vars.data(), static_cast<Eigen::Index>(vars.size()))};
      auto ds = parse_grid(d_grid);
      std::vector<double> ps = p_grid.empty() ? std::vector<double>{p_kl} : parse_grid(p_grid);
      const auto rows = sweep(sources, ds, ps, alloc_tol);
      std::ofstream os(out / "allocation.csv");
      write_sweep_csv(os, rows, bits);
      std::cout << "wrote " << (out / "allocation.csv").string() << " (" << rows.size()
                << " rows)\n";
    } else if (*cmd_region) {
      write_manifest(out, "region", app, seed);
      BroadcastChannelParams params(g1, g2, parse_noise_spec(noise1), parse_noise_spec(noise2),
                                    power);
      if (std::abs(params.noise1.mass() - 1.0) > 1e-6)
        std::cerr << "note: noise1 mass is " << params.noise1.mass() << ", not 1\n";
      if (std::abs(params.noise2.mass() - 1.0) > 1e-6)
        std::cerr << "note: noise2 mass is " << params.noise2.mass() << ", not 1\n";
      const auto curve = region_curve(params, n_alpha);
      std::ofstream os(out / "region.csv");
      write_region_csv(os, curve);
      std::cout << "wrote " << (out / "region.csv").string() << " (kl1=" << curve.kl1_nats
                << " nats, kl2=" << curve.kl2_nats << " nats)\n";
    } else if (*cmd_sim) {
      write_manifest(out, "simulate", app, seed);
      std::optional<double> f1, f2;
      TransmitOptions topt;
      topt.signed_gains = signed_gains;
      if (fading == "slow")
        topt.fading = FadingMode::Slow;
      else if (fading == "fast")
        topt.fading = FadingMode::Fast;
      else if (fading != "none")
        throw CLI::ValidationError("--fading", "expected none|slow|fast");
      if (topt.fading != FadingMode::None) {
        f1 = fade1;
        f2 = fade2;
      }
      BroadcastChannelParams params(sim_g1, sim_g2, parse_noise_spec(sim_noise1),
                                    parse_noise_spec(sim_noise2), sim_power, f1, f2);
      Rng rng = Rng(seed).derive("simulate-symbols");
      Eigen::ArrayXd x1 = rng.normal_array(symbols);
      Eigen::ArrayXd x2 = rng.normal_array(symbols);
      const auto frame = superpose(x1, x2, sim_alpha, sim_power);
      const auto rx = transmit(frame, params, topt, RngSeed{seed});
      const auto residual = sic_decode(rx, sim_alpha, params, x2);
      const auto report = superposition_rate_check(params, sim_alpha, symbols, RngSeed{seed});
      json j;
      j["alpha"] = sim_alpha;
      j["power"] = sim_power;
      j["empirical"] = {{"combined_power", frame.combined.square().mean()},
                        {"y1_power", rx.y1.square().mean()},
                        {"y2_power", rx.y2.square().mean()},
                        {"residual_power", residual.square().mean()}};
      j["sinr"] = {{"user1_analytic", report.sinr1_analytic},
                   {"user1_empirical", report.sinr1_empirical},
                   {"user2_analytic", report.sinr2_analytic},
                   {"user2_empirical", report.sinr2_empirical}};
      j["gains"] = {{"g1", rx.gain1()}, {"g2", rx.gain2()}};
      std::ofstream os(out / "simulate.json");
      os << j.dump(2) << '\n';
      std::cout << "wrote " << (out / "simulate.json").string() << '\n';
    } else if (*cmd_train) {
      write_manifest(out, "train", app, seed);
      tc.seed = seed;
      if (snr_train > -1e8) tc.snr_train_db = snr_train;
      tc.train_noise = parse_noise_spec(train_noise);
      tc.gain_policy = gain_policy_from(gain_policy_name, gain_var, min_gain);
      const auto dataset = desk_train.dataset();
      const auto outcome = train(desk_train.schema(), desk_train.hidden_dim, dataset, tc);
      save_checkpoint(outcome.model, out / "model.smae");
      {
        std::ofstream os(out / "schema.json");
        os << schema_to_json(outcome.model.schema()).dump(2) << '\n';
      }
      {
        std::ofstream os(out / "history.csv");
        os << "cycle,self_loss,common_loss,different_loss\n";
        for (size_t i = 0; i < outcome.history.self_loss.size(); ++i) {
          os << i << ',' << outcome.history.self_loss[i] << ','
             << outcome.history.common_loss[i] << ',' << outcome.history.different_loss[i]
             << '\n';
        }
      }
      std::cout << "wrote " << (out / "model.smae").string() << '\n';
    } else if (*cmd_eval) {
      write_manifest(out, "eval", app, seed);
      const AeModel model = load_checkpoint(eval_ckpt);
      const auto dataset = desk_eval.dataset();
      TrainChannel ch;
      ch.gain = gain_policy_from(eval_gain_policy, eval_gain_var, eval_min_gain);
      if (eval_snr > -1e8) ch.snr_db = eval_snr;
      ch.noise = parse_noise_spec(eval_noise);
      json j;
      j["mse"] = mean_reconstruction_error(model, dataset, ch, eval_reps,
                                           Rng(seed).derive("eval-mse"));
      j["psnr"] = mean_psnr(model, dataset, ch, eval_reps, Rng(seed).derive("eval-psnr"));
      json swaps = json::array();
      for (int b = 0; b < model.schema().n_blocks(); ++b)
        swaps.push_back(swap_accuracy(model, dataset, b, swap_pairs,
                                      Rng(seed).derive("eval-swap").derive(b)));
      j["swap_accuracy"] = swaps;
      json comp = json::array();
      for (int u = 0; u < model.n_users(); ++u)
        comp.push_back(completion_agreement(model, dataset, u, swap_pairs,
                                            Rng(seed).derive("eval-completion").derive(u)));
      j["completion_agreement"] = comp;
      std::ofstream os(out / "eval.json");
      os << j.dump(2) << '\n';
      std::cout << j.dump(2) << '\n';
    } else if (*cmd_sweep) {
      write_manifest(out, "psnr-sweep", app, seed);
      const auto dataset = desk_sweep.dataset();
      std::vector<std::pair<std::string, AeModel>> models;
      for (const auto& s : schemes) {
        const auto eq = s.find('=');
        if (eq == std::string::npos)
          throw CLI::ValidationError("--scheme", "expected name=checkpoint");
        models.emplace_back(s.substr(0, eq), load_checkpoint(s.substr(eq + 1)));
      }
      std::ofstream os(out / "psnr_sweep.csv");
      os << "snr_db";
      for (const auto& [name, m] : models) os << ",psnr_" << name;
      os << '\n';
      for (double snr = snr_from; snr <= snr_to + 1e-9; snr += snr_step) {
        os << snr;
        for (const auto& [name, m] : models) {
          TrainChannel ch;
          ch.gain = gain_policy_from(sweep_gain_policy, sweep_gain_var, sweep_min_gain);
          ch.snr_db = snr;
          ch.noise = parse_noise_spec(sweep_noise);
          os << ',' << mean_psnr(m, dataset, ch, sweep_reps, Rng(seed).derive("psnr-sweep"));
        }
        os << '\n';
      }
      std::cout << "wrote " << (out / "psnr_sweep.csv").string() << '\n';
    } else if (*cmd_serve) {
      write_manifest(out, "serve", app, seed);
      const AeModel model = load_checkpoint(serve_ckpt);
      if (!serve_schema.empty()) {
        std::ifstream is(serve_schema);
        if (!is) throw std::runtime_error("cannot open schema " + serve_schema);
        json j;
        is >> j;
        if (!(schema_from_json(j) == model.schema()))
          throw std::runtime_error("schema file does not match the checkpoint schema");
      }
      const auto dataset = desk_serve.dataset();
      Transmitter tx(port, bind_addr);
      std::cout << "listening on " << bind_addr << ':' << tx.port() << '\n';
      const auto metrics = tx.serve(model, dataset.samples(), serve_frames, serve_users,
                                    serve_raw);
      json j;
      j["frames"] = metrics.frames;
      j["wall_ms"] = metrics.wall_ms;
      j["per_frame_ms"] = metrics.per_frame_ms;
      j["raw_mode"] = metrics.raw_mode;
      j["users"] = json::array();
      for (const auto& u : metrics.users) {
        j["users"].push_back({{"user_id", u.user_id},
                              {"interest_bitmap", u.interest_bitmap},
                              {"frames", u.frames},
                              {"payload_bytes", u.payload_bytes},
                              {"wire_bytes", u.wire_bytes},
                              {"compression_ratio", u.compression_ratio}});
      }
      std::ofstream os(out / "serve_metrics.json");
      os << j.dump(2) << '\n';
      std::cout << j.dump(2) << '\n';
    } else if (*cmd_recv) {
      write_manifest(out, "recv", app, seed);
      const AeModel model = load_checkpoint(recv_ckpt);
      ReceiveOptions opt;
      opt.user_id = recv_user;
      opt.interest_bitmap = parse_bitmap(interest);
      if (!donor_file.empty()) {
        const Eigen::MatrixXd donor = read_matrix_file(donor_file, model.latent_dim());
        opt.donor = donor.col(0);
      }
      if (!truth_file.empty()) opt.truth = read_matrix_file(truth_file, model.input_dim());
      const auto metrics = receive(connect_host, recv_port, &model, opt);
      json j;
      j["user_id"] = metrics.user_id;
      j["frames"] = metrics.frames;
      j["decoded"] = metrics.decoded;
      j["crc_failures"] = metrics.crc_failures;
      j["resyncs"] = metrics.resyncs;
      j["payload_bytes"] = metrics.payload_bytes;
      j["got_bye"] = metrics.got_bye;
      if (opt.truth) j["mean_psnr"] = metrics.mean_psnr;
      std::ofstream os(out / "recv_metrics.json");
      os << j.dump(2) << '\n';
      std::cout << j.dump(2) << '\n';
    } else {
      std::cout << app.help() << std::endl;
      return 2;
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
