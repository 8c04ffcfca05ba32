#ifndef SCRG_DATA_IO_HPP
#define SCRG_DATA_IO_HPP

#include <iosfwd>
#include <json.hpp>
#include <string>
#include <vector>

#include "scrg/autodiff.hpp"
#include "scrg/causal_kg.hpp"
#include "scrg/model.hpp"

namespace scrg {

// One tracked entity in one segment. Line format (whitespace separated):
//   video_id segment entity_id kind class_label x y m n [f1 ... fD]
// The feature tail is optional; absent features are synthesized later from
// the class label.
struct TrackRecord {
  std::string video_id;
  int segment = 0;
  std::string entity_id;
  EntityKind kind = EntityKind::Human;
  std::string class_label;
  double x = 0, y = 0, m = 0, n = 0;
  Vec feature;  // size 0 when absent
};

// One entity's active actions in one segment (or frame with --frame-level):
//   video_id segment entity_id [id1 id2 ...]
struct ActionRecord {
  std::string video_id;
  int segment = 0;
  std::string entity_id;
  LabelSet actions;
};

// expected_dim > 0 enforces the feature length; 0 accepts any.
std::vector<TrackRecord> load_tracks(std::istream& in, int expected_dim);
std::vector<ActionRecord> load_actions(std::istream& in, int n_actions);
void save_tracks(const std::vector<TrackRecord>& records, std::ostream& out);
void save_actions(const std::vector<ActionRecord>& records, std::ostream& out);

std::vector<TrackRecord> load_tracks_file(const std::string& path, int expected_dim);
std::vector<ActionRecord> load_actions_file(const std::string& path, int n_actions);

// Deterministic class-conditioned Gaussian feature, standing in for a
// learned per-entity encoder. Identical (class, dim, seed, entity) always
// yields the same vector.
Vec synthesize_feature(const std::string& class_label, const std::string& entity_id, int dim,
                       std::uint64_t seed);
void fill_missing_features(std::vector<TrackRecord>& records, int dim, std::uint64_t seed);

// --- checkpoints ----------------------------------------------------------

// Binary layout: "SCRG" magic, one version byte, u32 config-JSON length,
// config JSON, u32 parameter count, then per parameter: u16 name length,
// name, u32 rows, u32 cols, row-major little-endian f64 payload.
void save_checkpoint(std::ostream& out, const nlohmann::json& config,
                     const ad::ParamStore& params);
struct Checkpoint {
  nlohmann::json config;
  ad::ParamStore params;
};
Checkpoint load_checkpoint(std::istream& in);
void save_checkpoint_file(const std::string& path, const nlohmann::json& config,
                          const ad::ParamStore& params);
Checkpoint load_checkpoint_file(const std::string& path);

// --- synthetic benchmark ----------------------------------------------------

// Planted-rule generator. Vocabulary: BG, Walking, Carrying, Open_Trunk,
// Talking (+ Standing when n_actions >= 6). Rules:
//   - BG is always active.
//   - each human is a walker or a stander; walkers fire Walking with p_type
//     (standers fire Standing when the vocabulary includes it). The
//     disposition is NOT encoded in the feature vector, so it can only be
//     inferred from the action history.
//   - humans near a box-class object carry with p_spatial per segment;
//     humans away from boxes start carrying with p_far_start and keep
//     carrying with p_far_stay (a persistent state the scene cannot reveal).
//   - Carrying at t implies Open_Trunk at t+1 with p_causal, else
//     p_causal_base.
//   - with a 6-action vocabulary, Talking fires with p_type when another
//     human of talker disposition is in the scene.
struct SyntheticRules {
  int n_actions = 6;
  double p_type = 0.95;
  double p_spatial = 0.95;
  double p_causal = 0.9;
  double p_causal_base = 0.01;
  double p_far_start = 0.05;
  double p_far_stay = 0.8;
  double p_near_box = 0.5;
  int min_segments = 5, max_segments = 6;
  int min_humans = 2, max_humans = 3;
  double lambda = 1.5;
  int feature_dim = 12;
};

ActionVocab synthetic_vocab(int n_actions);

struct SyntheticData {
  std::vector<TrackRecord> tracks;
  std::vector<ActionRecord> actions;
};

SyntheticData generate_synthetic(std::uint64_t seed, int n_scenes, const SyntheticRules& rules);

// --- dataset assembly -------------------------------------------------------

// Groups records into per-scene samples: the graph at segment s, each
// labeled human's history through s, and its labels at s+1.
std::vector<SceneSample> build_dataset(const std::vector<TrackRecord>& tracks,
                                       const std::vector<ActionRecord>& actions,
                                       const ModelConfig& cfg, bool require_labels);

}  // namespace scrg

#endif
