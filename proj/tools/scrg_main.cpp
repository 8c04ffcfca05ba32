#include <CLI11.hpp>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>

#include "scrg/data_io.hpp"
#include "scrg/eval.hpp"
#include "scrg/train.hpp"

namespace {

using namespace scrg;

ActionVocab load_vocab_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocab file: " + path);
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') names.push_back(line);
  }
  return ActionVocab::from_names(std::move(names));
}

ModelConfig load_config_file(const std::string& path) {
  if (path.empty()) return ModelConfig{};
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  return config_from_json(nlohmann::json::parse(in));
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  return out;
}

// Per-person ordered label-set sequences, either segment-level directly or
// unioned from frame-level records.
std::vector<std::vector<LabelSet>> action_sequences(const std::vector<ActionRecord>& records,
                                                    bool frame_level, int segment_len) {
  std::map<std::pair<std::string, std::string>, std::map<int, LabelSet>> per_person;
  for (const auto& r : records) per_person[{r.video_id, r.entity_id}][r.segment] = r.actions;
  std::vector<std::vector<LabelSet>> sequences;
  for (const auto& [key, by_time] : per_person) {
    if (frame_level) {
      const int max_frame = by_time.rbegin()->first;
      std::vector<LabelSet> frames(static_cast<std::size_t>(max_frame) + 1);
      for (const auto& [frame, set] : by_time) frames[static_cast<std::size_t>(frame)] = set;
      sequences.push_back(segment_frames(frames, segment_len));
    } else {
      std::vector<LabelSet> segments;
      for (const auto& [seg, set] : by_time) segments.push_back(set);
      sequences.push_back(std::move(segments));
    }
  }
  return sequences;
}

int cmd_kg_build(const std::string& actions_path, const std::string& out_path,
                 int segment_len, bool frame_level, const std::string& vocab_path,
                 const std::string& dot_path) {
  ActionVocab vocab = vocab_path.empty() ? ActionVocab::standard30() : load_vocab_file(vocab_path);
  auto records = load_actions_file(actions_path, vocab.size());
  auto sequences = action_sequences(records, frame_level, segment_len);
  Mat counts = count_transitions(sequences, vocab.size());
  ActionKG kg = build_kg(counts, vocab);
  int rows_with_support = 0;
  for (Index i = 0; i < kg.weights.rows(); ++i) {
    if (kg.weights.row(i).sum() > 0.0) ++rows_with_support;
  }
  auto out = open_output(out_path);
  save_kg(kg, out);
  if (!dot_path.empty()) {
    auto dot = open_output(dot_path);
    write_kg_dot(kg, dot);
  }
  std::cout << "ok actions=" << vocab.size() << " rows_with_support=" << rows_with_support
            << " edges=" << kg.edges.size() << "\n";
  return 0;
}

nlohmann::json checkpoint_config(const ModelConfig& cfg, const ActionVocab& vocab) {
  return nlohmann::json{{"model", to_json(cfg)}, {"vocab", vocab.names}};
}

int cmd_train(const std::string& tracks_path, const std::string& actions_path,
              const std::string& kg_path, const std::string& config_path,
              const std::string& out_path, const std::string& init_path,
              std::optional<std::uint64_t> seed_override) {
  ModelConfig cfg = load_config_file(config_path);
  if (seed_override) cfg.seed = *seed_override;
  std::ifstream kg_in(kg_path);
  if (!kg_in) throw std::runtime_error("cannot open kg file: " + kg_path);
  ActionKG kg = load_kg(kg_in);
  cfg.n_actions = kg.vocab.size();

  auto tracks = load_tracks_file(tracks_path, cfg.feature_dim);
  fill_missing_features(tracks, cfg.feature_dim, cfg.seed);
  auto actions = load_actions_file(actions_path, cfg.n_actions);
  auto samples = build_dataset(tracks, actions, cfg, true);

  ad::ParamStore params;
  if (init_path.empty()) {
    init_params(params, cfg);
  } else {
    Checkpoint ckpt = load_checkpoint_file(init_path);
    const auto vocab = ckpt.config.at("vocab").get<std::vector<std::string>>();
    if (vocab != kg.vocab.names) {
      throw std::runtime_error("vocab mismatch between init checkpoint and kg");
    }
    ModelConfig init_cfg = config_from_json(ckpt.config.at("model"));
    init_cfg.epochs = cfg.epochs;
    init_cfg.seed = cfg.seed;
    init_cfg.learning_rate = cfg.learning_rate;
    cfg = init_cfg;
    for (const auto& name : ckpt.params.names()) {
      const Mat& v = ckpt.params.value(name);
      params.create(name, v.rows(), v.cols()) = v;
    }
  }

  std::vector<Mat> t_powers = crn::transition_powers(crn::transition_matrix(kg), cfg.k_steps);
  auto result =
      train(params, samples, cfg, t_powers, [](const std::string& m) { std::cerr << m << "\n"; });
  auto out = open_output(out_path);
  save_checkpoint(out, checkpoint_config(cfg, kg.vocab), params);
  std::cout << std::setprecision(17) << "ok samples=" << samples.size()
            << " epochs=" << cfg.epochs << " final_loss="
            << (result.epoch_losses.empty() ? 0.0 : result.epoch_losses.back()) << "\n";
  return 0;
}

struct LoadedModel {
  ModelConfig cfg;
  ActionVocab vocab;
  ad::ParamStore params;
  std::vector<Mat> t_powers;
};

LoadedModel load_model(const std::string& checkpoint_path, const std::string& kg_path) {
  Checkpoint ckpt = load_checkpoint_file(checkpoint_path);
  LoadedModel model;
  model.cfg = config_from_json(ckpt.config.at("model"));
  model.vocab = ActionVocab::from_names(ckpt.config.at("vocab").get<std::vector<std::string>>());
  for (const auto& name : ckpt.params.names()) {
    const Mat& v = ckpt.params.value(name);
    model.params.create(name, v.rows(), v.cols()) = v;
  }
  if (model.cfg.model_type == ModelType::Full) {
    if (kg_path.empty()) {
      throw std::runtime_error("checkpoint was trained with a knowledge graph; pass --kg");
    }
    std::ifstream kg_in(kg_path);
    if (!kg_in) throw std::runtime_error("cannot open kg file: " + kg_path);
    ActionKG kg = load_kg(kg_in);
    if (kg.vocab.names != model.vocab.names) {
      throw std::runtime_error("vocab mismatch between checkpoint and kg");
    }
    model.t_powers = crn::transition_powers(crn::transition_matrix(kg), model.cfg.k_steps);
  }
  return model;
}

void write_predictions(const std::vector<PredictionRow>& rows, std::ostream& out) {
  out << std::setprecision(17);
  for (const auto& r : rows) {
    out << r.video_id << ' ' << r.segment << ' ' << r.entity_id;
    for (Index c = 0; c < r.probs.size(); ++c) out << ' ' << r.probs(c);
    out << '\n';
  }
}

void dump_attention(ad::ParamStore& params, const std::vector<SceneSample>& samples,
                    const ModelConfig& cfg, const std::vector<Mat>& t_powers,
                    std::ostream& out) {
  out << std::setprecision(17);
  out << "video\tsegment\tentity\tquantity\thead\tindex\tvalue\n";
  const Vec unit = Vec::Ones(cfg.n_actions);
  for (const auto& scene : samples) {
    ad::Binding binding(params);
    auto fwd = forward_scene(binding, scene, cfg, t_powers, unit, false);
    for (std::size_t p = 0; p < fwd.betas.size(); ++p) {
      out << scene.video_id << '\t' << scene.segment << "\t-\tbeta\t-\t" << p << '\t'
          << fwd.betas[p] << '\n';
    }
    for (const auto& d : fwd.diagnostics) {
      auto dump_alpha = [&](const char* name,
                            const std::vector<std::vector<double>>& alphas) {
        for (std::size_t head = 0; head < alphas.size(); ++head) {
          for (std::size_t j = 0; j < alphas[head].size(); ++j) {
            out << scene.video_id << '\t' << scene.segment << '\t' << d.human_id << '\t'
                << name << '\t' << head << '\t' << j << '\t' << alphas[head][j] << '\n';
          }
        }
      };
      dump_alpha("alpha_hh", d.alpha_hh);
      dump_alpha("alpha_oh", d.alpha_oh);
      out << scene.video_id << '\t' << scene.segment << '\t' << d.human_id << "\tgate\t-\t-\t"
          << d.gate << '\n';
    }
  }
}

int cmd_predict(bool with_eval, const std::string& checkpoint_path,
                const std::string& tracks_path, const std::string& actions_path,
                const std::string& kg_path, const std::string& out_path,
                const std::string& attention_path, const std::string& graph_dump_path,
                const std::string& predictions_path) {
  LoadedModel model = load_model(checkpoint_path, kg_path);
  auto tracks = load_tracks_file(tracks_path, model.cfg.feature_dim);
  fill_missing_features(tracks, model.cfg.feature_dim, model.cfg.seed);
  std::vector<ActionRecord> actions;
  if (!actions_path.empty()) {
    actions = load_actions_file(actions_path, model.cfg.n_actions);
  } else if (with_eval) {
    throw std::runtime_error("eval requires --actions for ground-truth labels");
  }
  auto samples = build_dataset(tracks, actions, model.cfg, with_eval);
  auto rows = predict_all(model.params, samples, model.cfg, model.t_powers);

  if (graph_dump_path.empty() == false) {
    auto gout = open_output(graph_dump_path);
    for (const auto& scene : samples) write_edge_list(scene.graph, gout);
  }
  if (!attention_path.empty()) {
    auto aout = open_output(attention_path);
    dump_attention(model.params, samples, model.cfg, model.t_powers, aout);
  }

  if (with_eval) {
    std::vector<eval::EvalRecord> records;
    for (const auto& r : rows) records.push_back({r.probs, r.labels});
    auto result = eval::mean_ap(records);
    auto out = open_output(out_path);
    eval::write_ap_table(result, model.vocab.names, out);
    if (!predictions_path.empty()) {
      auto pout = open_output(predictions_path);
      write_predictions(rows, pout);
    }
    std::cout << std::setprecision(17) << "ok samples=" << rows.size()
              << " map=" << result.mean_ap << "\n";
  } else {
    auto out = open_output(out_path);
    write_predictions(rows, out);
    std::cout << "ok samples=" << rows.size() << "\n";
  }
  return 0;
}

int cmd_synth(std::uint64_t seed, int scenes, const SyntheticRules& rules,
              const std::string& tracks_path, const std::string& actions_path,
              const std::string& vocab_path) {
  auto data = generate_synthetic(seed, scenes, rules);
  {
    auto out = open_output(tracks_path);
    save_tracks(data.tracks, out);
  }
  {
    auto out = open_output(actions_path);
    save_actions(data.actions, out);
  }
  if (!vocab_path.empty()) {
    auto out = open_output(vocab_path);
    for (const auto& name : synthetic_vocab(rules.n_actions).names) out << name << '\n';
  }
  std::cout << "ok scenes=" << scenes << " tracks=" << data.tracks.size()
            << " actions=" << data.actions.size() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Human action prediction over heterogeneous scene graphs"};
  app.require_subcommand(1);

  // kg-build
  auto* kg_cmd = app.add_subcommand("kg-build", "Build the action-transition knowledge graph");
  std::string kg_actions, kg_out, kg_vocab, kg_dot;
  int kg_segment_frames = 12;
  bool kg_frame_level = false;
  kg_cmd->add_option("--actions", kg_actions, "actions file")->required();
  kg_cmd->add_option("--out", kg_out, "output kg file")->required();
  kg_cmd->add_option("--segment-frames", kg_segment_frames, "frames per segment")
      ->capture_default_str();
  kg_cmd->add_flag("--frame-level", kg_frame_level,
                   "treat the time index as frames and union them into segments");
  kg_cmd->add_option("--vocab", kg_vocab, "action vocabulary file (default: the 30-action set)");
  kg_cmd->add_option("--dot", kg_dot, "also export the graph in DOT format");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Generate the planted-rule synthetic benchmark");
  std::uint64_t synth_seed = 1;
  int synth_scenes = 100;
  SyntheticRules rules;
  std::string synth_tracks, synth_actions, synth_vocab;
  synth_cmd->add_option("--seed", synth_seed, "generator seed")->capture_default_str();
  synth_cmd->add_option("--scenes", synth_scenes, "number of scenes")->capture_default_str();
  synth_cmd->add_option("--out-tracks", synth_tracks, "output tracks file")->required();
  synth_cmd->add_option("--out-actions", synth_actions, "output actions file")->required();
  synth_cmd->add_option("--out-vocab", synth_vocab, "output vocabulary file");
  synth_cmd->add_option("--n-actions", rules.n_actions, "vocabulary size (5 or 6)")
      ->capture_default_str();
  synth_cmd->add_option("--p-spatial", rules.p_spatial, "P(Carrying | near box)")
      ->capture_default_str();
  synth_cmd->add_option("--p-causal", rules.p_causal, "P(Open_Trunk at t+1 | Carrying at t)")
      ->capture_default_str();
  synth_cmd->add_option("--p-type", rules.p_type, "P(type action fires)")->capture_default_str();
  synth_cmd->add_option("--feature-dim", rules.feature_dim, "feature vector length")
      ->capture_default_str();
  synth_cmd->add_option("--min-humans", rules.min_humans, "humans per scene, lower bound")
      ->capture_default_str();
  synth_cmd->add_option("--max-humans", rules.max_humans, "humans per scene, upper bound")
      ->capture_default_str();

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  std::string tr_tracks, tr_actions, tr_kg, tr_config, tr_out, tr_init;
  std::optional<std::uint64_t> tr_seed;
  train_cmd->add_option("--tracks", tr_tracks, "tracks file")->required();
  train_cmd->add_option("--actions", tr_actions, "actions file")->required();
  train_cmd->add_option("--kg", tr_kg, "knowledge graph file")->required();
  train_cmd->add_option("--config", tr_config, "hyperparameter file (JSON; defaults in README)");
  train_cmd->add_option("--out", tr_out, "output checkpoint")->required();
  train_cmd->add_option("--init", tr_init, "resume from this checkpoint");
  train_cmd->add_option("--seed", tr_seed, "override the config seed");

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "Write per-human action probabilities");
  std::string pr_ckpt, pr_tracks, pr_actions, pr_kg, pr_out, pr_att, pr_graph;
  predict_cmd->add_option("--checkpoint", pr_ckpt, "trained checkpoint")->required();
  predict_cmd->add_option("--tracks", pr_tracks, "tracks file")->required();
  predict_cmd->add_option("--actions", pr_actions, "action history for the causal stream");
  predict_cmd->add_option("--kg", pr_kg, "knowledge graph file");
  predict_cmd->add_option("--out", pr_out, "output probability rows")->required();
  predict_cmd->add_option("--dump-attention", pr_att, "write alpha/beta/gate diagnostics");
  predict_cmd->add_option("--graph-dump", pr_graph, "write spatial edge lists");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate mAP against ground truth");
  std::string ev_ckpt, ev_tracks, ev_actions, ev_kg, ev_out, ev_att, ev_graph, ev_pred;
  eval_cmd->add_option("--checkpoint", ev_ckpt, "trained checkpoint")->required();
  eval_cmd->add_option("--tracks", ev_tracks, "tracks file")->required();
  eval_cmd->add_option("--actions", ev_actions, "actions file (history + labels)")->required();
  eval_cmd->add_option("--kg", ev_kg, "knowledge graph file");
  eval_cmd->add_option("--out", ev_out, "output AP table")->required();
  eval_cmd->add_option("--predictions", ev_pred, "also write probability rows");
  eval_cmd->add_option("--dump-attention", ev_att, "write alpha/beta/gate diagnostics");
  eval_cmd->add_option("--graph-dump", ev_graph, "write spatial edge lists");

  CLI11_PARSE(app, argc, argv);

  try {
    if (kg_cmd->parsed()) {
      return cmd_kg_build(kg_actions, kg_out, kg_segment_frames, kg_frame_level, kg_vocab, kg_dot);
    }
    if (synth_cmd->parsed()) {
      return cmd_synth(synth_seed, synth_scenes, rules, synth_tracks, synth_actions, synth_vocab);
    }
    if (train_cmd->parsed()) {
      return cmd_train(tr_tracks, tr_actions, tr_kg, tr_config, tr_out, tr_init, tr_seed);
    }
    if (predict_cmd->parsed()) {
      return cmd_predict(false, pr_ckpt, pr_tracks, pr_actions, pr_kg, pr_out, pr_att, pr_graph,
                         "");
    }
    if (eval_cmd->parsed()) {
      return cmd_predict(true, ev_ckpt, ev_tracks, ev_actions, ev_kg, ev_out, ev_att, ev_graph,
                         ev_pred);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
