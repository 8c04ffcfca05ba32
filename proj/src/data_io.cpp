#include "scrg/data_io.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace scrg {

namespace {

[[noreturn]] void line_error(const std::string& what, std::size_t line_no) {
  throw std::runtime_error(what + " at line " + std::to_string(line_no));
}

EntityKind kind_from_string(const std::string& s, std::size_t line_no) {
  if (s == "human") return EntityKind::Human;
  if (s == "object") return EntityKind::Object;
  line_error("unknown entity kind '" + s + "'", line_no);
}

std::string kind_to_string(EntityKind k) {
  return k == EntityKind::Human ? "human" : "object";
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

std::vector<TrackRecord> load_tracks(std::istream& in, int expected_dim) {
  std::vector<TrackRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    TrackRecord rec;
    std::string kind;
    if (!(ls >> rec.video_id >> rec.segment >> rec.entity_id >> kind >> rec.class_label >>
          rec.x >> rec.y >> rec.m >> rec.n)) {
      line_error("malformed track record", line_no);
    }
    rec.kind = kind_from_string(kind, line_no);
    if (!(rec.m > 0.0) || !(rec.n > 0.0)) line_error("nonpositive bbox dimensions", line_no);
    std::vector<double> feature;
    double v;
    while (ls >> v) feature.push_back(v);
    if (!ls.eof()) line_error("trailing garbage in track record", line_no);
    if (!feature.empty()) {
      if (expected_dim > 0 && static_cast<int>(feature.size()) != expected_dim) {
        line_error("feature length " + std::to_string(feature.size()) + " does not match " +
                       std::to_string(expected_dim),
                   line_no);
      }
      rec.feature = Eigen::Map<Vec>(feature.data(), static_cast<Index>(feature.size()));
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<ActionRecord> load_actions(std::istream& in, int n_actions) {
  std::vector<ActionRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    ActionRecord rec;
    if (!(ls >> rec.video_id >> rec.segment >> rec.entity_id)) {
      line_error("malformed action record", line_no);
    }
    std::set<int> ids;
    int id;
    while (ls >> id) {
      if (n_actions > 0 && (id < 0 || id >= n_actions)) {
        line_error("action id " + std::to_string(id) + " outside vocabulary", line_no);
      }
      ids.insert(id);
    }
    if (!ls.eof()) line_error("malformed action id", line_no);
    rec.actions.assign(ids.begin(), ids.end());
    records.push_back(std::move(rec));
  }
  return records;
}

void save_tracks(const std::vector<TrackRecord>& records, std::ostream& out) {
  out << std::setprecision(17);
  for (const auto& r : records) {
    out << r.video_id << ' ' << r.segment << ' ' << r.entity_id << ' ' << kind_to_string(r.kind)
        << ' ' << r.class_label << ' ' << r.x << ' ' << r.y << ' ' << r.m << ' ' << r.n;
    for (Index i = 0; i < r.feature.size(); ++i) out << ' ' << r.feature(i);
    out << '\n';
  }
}

void save_actions(const std::vector<ActionRecord>& records, std::ostream& out) {
  for (const auto& r : records) {
    out << r.video_id << ' ' << r.segment << ' ' << r.entity_id;
    for (int a : r.actions) out << ' ' << a;
    out << '\n';
  }
}

std::vector<TrackRecord> load_tracks_file(const std::string& path, int expected_dim) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open tracks file: " + path);
  return load_tracks(in, expected_dim);
}

std::vector<ActionRecord> load_actions_file(const std::string& path, int n_actions) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open actions file: " + path);
  return load_actions(in, n_actions);
}

Vec synthesize_feature(const std::string& class_label, const std::string& entity_id, int dim,
                       std::uint64_t seed) {
  // class mean is a function of the class alone; per-entity noise on top
  std::mt19937_64 class_rng(seed ^ fnv1a(class_label));
  std::normal_distribution<double> dist(0.0, 1.0);
  Vec mean(dim);
  for (int i = 0; i < dim; ++i) mean(i) = 2.0 * dist(class_rng);
  std::mt19937_64 entity_rng(seed ^ fnv1a(entity_id) ^ 0x9e3779b97f4a7c15ull);
  Vec feature(dim);
  for (int i = 0; i < dim; ++i) feature(i) = mean(i) + 0.3 * dist(entity_rng);
  return feature;
}

void fill_missing_features(std::vector<TrackRecord>& records, int dim, std::uint64_t seed) {
  for (auto& r : records) {
    if (r.feature.size() == 0) {
      r.feature = synthesize_feature(r.class_label, r.entity_id, dim, seed);
    }
  }
}

// --- checkpoints ----------------------------------------------------------

namespace {

template <typename T>
void write_raw(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw std::runtime_error("checkpoint truncated");
  }
  return value;
}

constexpr char kMagic[4] = {'S', 'C', 'R', 'G'};
constexpr std::uint8_t kVersion = 1;

}  // namespace

void save_checkpoint(std::ostream& out, const nlohmann::json& config,
                     const ad::ParamStore& params) {
  out.write(kMagic, 4);
  write_raw(out, kVersion);
  const std::string cfg = config.dump();
  write_raw(out, static_cast<std::uint32_t>(cfg.size()));
  out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  write_raw(out, static_cast<std::uint32_t>(params.names().size()));
  for (const auto& name : params.names()) {
    const Mat& v = params.value(name);
    write_raw(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_raw(out, static_cast<std::uint32_t>(v.rows()));
    write_raw(out, static_cast<std::uint32_t>(v.cols()));
    for (Index r = 0; r < v.rows(); ++r) {
      for (Index c = 0; c < v.cols(); ++c) write_raw(out, v(r, c));
    }
  }
}

Checkpoint load_checkpoint(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("not a checkpoint file (bad magic)");
  }
  const auto version = read_raw<std::uint8_t>(in);
  if (version != kVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  const auto cfg_len = read_raw<std::uint32_t>(in);
  std::string cfg(cfg_len, '\0');
  if (!in.read(cfg.data(), cfg_len)) throw std::runtime_error("checkpoint truncated");
  ckpt.config = nlohmann::json::parse(cfg);
  const auto n_params = read_raw<std::uint32_t>(in);
  for (std::uint32_t p = 0; p < n_params; ++p) {
    const auto name_len = read_raw<std::uint16_t>(in);
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw std::runtime_error("checkpoint truncated");
    const auto rows = read_raw<std::uint32_t>(in);
    const auto cols = read_raw<std::uint32_t>(in);
    Mat& v = ckpt.params.create(name, rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r) {
      for (std::uint32_t c = 0; c < cols; ++c) v(r, c) = read_raw<double>(in);
    }
  }
  return ckpt;
}

void save_checkpoint_file(const std::string& path, const nlohmann::json& config,
                          const ad::ParamStore& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  save_checkpoint(out, config, params);
}

Checkpoint load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  return load_checkpoint(in);
}

// --- synthetic benchmark ----------------------------------------------------

ActionVocab synthetic_vocab(int n_actions) {
  std::vector<std::string> names = {"BG",         "Walking", "Carrying",
                                    "Open_Trunk", "Talking", "Standing"};
  if (n_actions < 5 || n_actions > static_cast<int>(names.size())) {
    throw std::invalid_argument("synthetic_vocab: supported sizes are 5 or 6");
  }
  names.resize(static_cast<std::size_t>(n_actions));
  return ActionVocab::from_names(std::move(names));
}

namespace {

void check_prob(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument(std::string("generate_synthetic: ") + name + " not in [0,1]");
  }
}

// The walker/stander disposition is deliberately absent from the feature:
// the appearance stream cannot reveal it, only the action history can.
Vec planted_feature(int dim, bool talker, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, 0.3);
  Vec f = Vec::Zero(dim);
  if (talker) f(2) = 2.0;
  for (int i = 0; i < dim; ++i) f(i) += noise(rng);
  return f;
}

Vec object_feature(int dim, bool box, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, 0.3);
  Vec f = Vec::Zero(dim);
  f(box ? 3 : 4) = 2.0;
  for (int i = 0; i < dim; ++i) f(i) += noise(rng);
  return f;
}

}  // namespace

SyntheticData generate_synthetic(std::uint64_t seed, int n_scenes, const SyntheticRules& rules) {
  check_prob(rules.p_type, "p_type");
  check_prob(rules.p_spatial, "p_spatial");
  check_prob(rules.p_causal, "p_causal");
  check_prob(rules.p_causal_base, "p_causal_base");
  check_prob(rules.p_far_start, "p_far_start");
  check_prob(rules.p_far_stay, "p_far_stay");
  check_prob(rules.p_near_box, "p_near_box");
  if (rules.feature_dim < 5) throw std::invalid_argument("generate_synthetic: feature_dim < 5");
  const ActionVocab vocab = synthetic_vocab(rules.n_actions);
  const bool with_standing = rules.n_actions >= 6;
  constexpr int kBg = 0, kWalking = 1, kCarrying = 2, kOpenTrunk = 3, kTalking = 4,
                kStanding = 5;

  SyntheticData data;
  for (int scene = 0; scene < n_scenes; ++scene) {
    std::seed_seq seq{seed, static_cast<std::uint64_t>(scene)};
    std::mt19937_64 rng(seq);
    auto coin = [&](double p) {
      return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
    };
    const std::string video = "v" + std::to_string(scene);
    const int n_segments =
        std::uniform_int_distribution<int>(rules.min_segments, rules.max_segments)(rng);
    const int n_humans =
        std::uniform_int_distribution<int>(rules.min_humans, rules.max_humans)(rng);

    struct Human {
      std::string id;
      bool walker, talker, near_box;
      double x, y;
      Vec feature;
      bool carrying = false;
    };
    std::vector<Human> humans;
    bool any_talker = false;
    std::vector<TrackRecord> scene_tracks;
    for (int h = 0; h < n_humans; ++h) {
      Human hu;
      hu.id = video + "_h" + std::to_string(h);
      hu.walker = coin(0.5);
      hu.talker = coin(0.5);
      hu.near_box = coin(rules.p_near_box);
      hu.x = 100.0 + 320.0 * h;
      hu.y = std::uniform_real_distribution<double>(100.0, 600.0)(rng);
      hu.feature = planted_feature(rules.feature_dim, hu.talker, rng);
      any_talker = any_talker || hu.talker;
      if (hu.near_box) {
        TrackRecord box;
        box.video_id = video;
        box.entity_id = video + "_o" + std::to_string(h) + "b";
        box.kind = EntityKind::Object;
        box.class_label = "box";
        box.x = hu.x + 50.0;
        box.y = hu.y + 10.0;
        box.m = 30.0;
        box.n = 30.0;
        box.feature = object_feature(rules.feature_dim, true, rng);
        scene_tracks.push_back(std::move(box));
      }
      if (coin(0.4)) {  // distractor inside the perception radius
        TrackRecord car;
        car.video_id = video;
        car.entity_id = video + "_o" + std::to_string(h) + "c";
        car.kind = EntityKind::Object;
        car.class_label = "car";
        car.x = hu.x - 80.0;
        car.y = hu.y - 20.0;
        car.m = 60.0;
        car.n = 40.0;
        car.feature = object_feature(rules.feature_dim, false, rng);
        scene_tracks.push_back(std::move(car));
      }
      humans.push_back(std::move(hu));
    }

    std::vector<std::vector<LabelSet>> timeline(humans.size());
    for (int t = 0; t < n_segments; ++t) {
      for (std::size_t h = 0; h < humans.size(); ++h) {
        Human& hu = humans[h];
        std::set<int> active{kBg};
        if (coin(rules.p_type)) {
          if (hu.walker) {
            active.insert(kWalking);
          } else if (with_standing) {
            active.insert(kStanding);
          }
        }
        const bool carried_before = hu.carrying;
        if (hu.near_box) {
          hu.carrying = coin(rules.p_spatial);
        } else {
          hu.carrying = coin(carried_before ? rules.p_far_stay : rules.p_far_start);
        }
        if (hu.carrying) active.insert(kCarrying);
        const bool carried_prev =
            t > 0 && std::binary_search(timeline[h][static_cast<std::size_t>(t - 1)].begin(),
                                        timeline[h][static_cast<std::size_t>(t - 1)].end(),
                                        kCarrying);
        if (coin(carried_prev ? rules.p_causal : rules.p_causal_base)) {
          active.insert(kOpenTrunk);
        }
        const bool other_talker =
            std::any_of(humans.begin(), humans.end(),
                        [&](const Human& o) { return o.talker && o.id != hu.id; });
        if (other_talker ? coin(rules.p_type) : coin(0.01)) active.insert(kTalking);
        timeline[h].emplace_back(active.begin(), active.end());
      }
    }

    for (int t = 0; t < n_segments; ++t) {
      for (std::size_t h = 0; h < humans.size(); ++h) {
        const Human& hu = humans[h];
        TrackRecord rec;
        rec.video_id = video;
        rec.segment = t;
        rec.entity_id = hu.id;
        rec.kind = EntityKind::Human;
        rec.class_label = "person";
        rec.x = hu.x;
        rec.y = hu.y;
        rec.m = 40.0;
        rec.n = 80.0;
        rec.feature = hu.feature;
        data.tracks.push_back(std::move(rec));
        ActionRecord act;
        act.video_id = video;
        act.segment = t;
        act.entity_id = hu.id;
        act.actions = timeline[h][static_cast<std::size_t>(t)];
        data.actions.push_back(std::move(act));
      }
      for (const auto& obj : scene_tracks) {
        TrackRecord rec = obj;
        rec.segment = t;
        data.tracks.push_back(std::move(rec));
      }
    }
    (void)vocab;
  }
  return data;
}

// --- dataset assembly -------------------------------------------------------

std::vector<SceneSample> build_dataset(const std::vector<TrackRecord>& tracks,
                                       const std::vector<ActionRecord>& actions,
                                       const ModelConfig& cfg, bool require_labels) {
  std::map<std::string, std::map<int, std::vector<const TrackRecord*>>> by_scene;
  for (const auto& t : tracks) by_scene[t.video_id][t.segment].push_back(&t);
  // (video, entity) -> segment -> label set
  std::map<std::pair<std::string, std::string>, std::map<int, LabelSet>> labels;
  for (const auto& a : actions) labels[{a.video_id, a.entity_id}][a.segment] = a.actions;

  std::vector<SceneSample> samples;
  for (const auto& [video, segments] : by_scene) {
    for (const auto& [segment, records] : segments) {
      SceneSample sample;
      sample.video_id = video;
      sample.segment = segment;
      std::vector<Entity> entities;
      for (const TrackRecord* r : records) {
        if (r->feature.size() != cfg.feature_dim) {
          throw std::runtime_error("entity " + r->entity_id +
                                   " has no feature of the configured dimension");
        }
        entities.push_back(Entity{r->entity_id, r->kind, r->class_label, r->x, r->y, r->m, r->n,
                                  r->feature});
      }
      sample.graph = build_graph(entities, cfg.lambda);
      for (int h = 0; h < static_cast<int>(sample.graph.humans.size()); ++h) {
        const auto& human = sample.graph.humans[static_cast<std::size_t>(h)];
        auto it = labels.find({video, human.entity_id});
        HumanTarget target;
        target.human_idx = h;
        if (it != labels.end()) {
          for (const auto& [seg, set] : it->second) {
            if (seg <= segment) target.history.push_back(set);
          }
        }
        if (require_labels) {
          if (it == labels.end()) continue;
          auto next = it->second.find(segment + 1);
          if (next == it->second.end()) continue;
          target.labels = Vec::Zero(cfg.n_actions);
          for (int a : next->second) {
            if (a < 0 || a >= cfg.n_actions) {
              throw std::runtime_error("action id out of range for entity " + human.entity_id);
            }
            target.labels(a) = 1.0;
          }
        }
        sample.targets.push_back(std::move(target));
      }
      if (!sample.targets.empty()) samples.push_back(std::move(sample));
    }
  }
  return samples;
}

}  // namespace scrg
