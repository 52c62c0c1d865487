#include "celp/episodes.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace celp {

namespace {

std::array<double, 3> hsv_to_rgb(double h, double s, double v) {
  const double c = v * s;
  const double hp = h / 60.0;
  const double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  if (hp < 1) { r = c; g = x; }
  else if (hp < 2) { r = x; g = c; }
  else if (hp < 3) { g = c; b = x; }
  else if (hp < 4) { g = x; b = c; }
  else if (hp < 5) { r = x; b = c; }
  else { r = c; b = x; }
  const double m = v - c;
  return {r + m, g + m, b + m};
}

std::vector<SyntheticClass> build_class_table() {
  std::vector<SyntheticClass> table(kNumClasses);
  for (int c = 0; c < kNumClasses; ++c) {
    SyntheticClass sc;
    sc.id = c;
    sc.shape = static_cast<ShapeFamily>(c % 6);
    sc.texture = c / 6;
    const double hue = 360.0 * c / kNumClasses;
    sc.tone_a = hsv_to_rgb(hue, 0.80, 0.95);
    sc.tone_b = hsv_to_rgb(hue, 0.45, 0.55);
    table[c] = sc;
  }
  return table;
}

// Integer floor division for texture lattice coordinates.
long floordiv(long a, long b) {
  long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

struct PlacedObject {
  int class_id = 0;
  ShapeFamily shape = ShapeFamily::Disk;
  long cx = 0, cy = 0;
  long size = 0;    // primary half-extent
  long extra = 0;   // secondary half-extent (rect height, ring inner radius, thickness)

  bool contains(long x, long y) const {
    const long dx = x - cx;
    const long dy = y - cy;
    switch (shape) {
      case ShapeFamily::Disk:
        return dx * dx + dy * dy <= size * size;
      case ShapeFamily::Rect:
        return std::labs(dx) <= size && std::labs(dy) <= extra;
      case ShapeFamily::Triangle: {
        // apex up, height 2*size
        const long down = y - (cy - size);
        return down >= 0 && down <= 2 * size && 2 * std::labs(dx) <= down;
      }
      case ShapeFamily::Ring: {
        const long d2 = dx * dx + dy * dy;
        return d2 <= size * size && d2 >= extra * extra;
      }
      case ShapeFamily::Cross:
        return std::labs(dx) <= size && std::labs(dy) <= size &&
               (std::labs(dx) <= extra || std::labs(dy) <= extra);
      case ShapeFamily::Bar:
        return std::labs(dx) <= size && std::labs(dy) <= extra;
    }
    return false;
  }
};

PlacedObject place_object(int class_id, Rng& rng) {
  PlacedObject obj;
  obj.class_id = class_id;
  obj.shape = class_table()[class_id].shape;
  const long margin = 14;
  obj.cx = static_cast<long>(margin + rng.bounded(kImageSize - 2 * margin));
  obj.cy = static_cast<long>(margin + rng.bounded(kImageSize - 2 * margin));
  switch (obj.shape) {
    case ShapeFamily::Disk:
      obj.size = static_cast<long>(6 + rng.bounded(7));  // r in [6,12]
      break;
    case ShapeFamily::Rect:
      obj.size = static_cast<long>(5 + rng.bounded(8));
      obj.extra = static_cast<long>(5 + rng.bounded(8));
      break;
    case ShapeFamily::Triangle:
      obj.size = static_cast<long>(7 + rng.bounded(8));
      break;
    case ShapeFamily::Ring:
      obj.size = static_cast<long>(8 + rng.bounded(7));
      obj.extra = obj.size - 4;
      break;
    case ShapeFamily::Cross:
      obj.size = static_cast<long>(7 + rng.bounded(7));
      obj.extra = 2;
      break;
    case ShapeFamily::Bar:
      obj.size = static_cast<long>(9 + rng.bounded(7));
      obj.extra = 2;
      break;
  }
  return obj;
}

std::array<double, 3> texture_color(const SyntheticClass& sc, long dx, long dy) {
  bool pick_a;
  if (sc.texture == 0) {
    pick_a = (floordiv(dy, 2) % 2 + 2) % 2 == 0;  // 2px stripes
  } else {
    pick_a = ((floordiv(dx, 3) + floordiv(dy, 3)) % 2 + 2) % 2 == 0;  // 3px checker
  }
  return pick_a ? sc.tone_a : sc.tone_b;
}

}  // namespace

const std::vector<SyntheticClass>& class_table() {
  static const std::vector<SyntheticClass> table = build_class_table();
  return table;
}

FoldSplit fold_split(int fold) {
  if (fold < 0 || fold >= kNumFolds) {
    throw ConfigError("fold: must lie in [0, " + std::to_string(kNumFolds) + "), got " +
                      std::to_string(fold));
  }
  FoldSplit split;
  split.fold = fold;
  for (int c = 0; c < kNumClasses; ++c) {
    if (c / 3 == fold) {
      split.test_classes.push_back(c);
    } else {
      split.train_classes.push_back(c);
    }
  }
  return split;
}

Scene generate_scene(const std::vector<int>& class_ids, Rng& rng) {
  if (class_ids.empty() || class_ids.size() > 3) {
    throw DimensionError("generate_scene: expected 1-3 class ids");
  }
  for (int c : class_ids) {
    if (c < 0 || c >= kNumClasses) {
      throw ConfigError("class_id: out of range: " + std::to_string(c));
    }
  }
  std::vector<PlacedObject> objects;
  objects.reserve(class_ids.size());
  for (int c : class_ids) objects.push_back(place_object(c, rng));

  // Later objects occlude earlier ones; ownership decides both color and mask.
  std::vector<int> owner(kImageSize * kImageSize, -1);
  for (std::size_t i = 0; i < objects.size(); ++i) {
    for (std::size_t y = 0; y < kImageSize; ++y) {
      for (std::size_t x = 0; x < kImageSize; ++x) {
        if (objects[i].contains(static_cast<long>(x), static_cast<long>(y))) {
          owner[y * kImageSize + x] = static_cast<int>(i);
        }
      }
    }
  }

  Scene scene;
  scene.image = Tensor({3, kImageSize, kImageSize});
  scene.masks.assign(class_ids.size(), LabelMask(kImageSize, kImageSize));
  const std::size_t plane = kImageSize * kImageSize;
  for (std::size_t p = 0; p < plane; ++p) {
    const int o = owner[p];
    std::array<double, 3> color;
    if (o < 0) {
      const double base = 0.15;
      color = {base + 0.10 * (2.0 * rng.uniform() - 1.0),
               base + 0.10 * (2.0 * rng.uniform() - 1.0),
               base + 0.10 * (2.0 * rng.uniform() - 1.0)};
    } else {
      const PlacedObject& obj = objects[static_cast<std::size_t>(o)];
      const SyntheticClass& sc = class_table()[obj.class_id];
      const long x = static_cast<long>(p % kImageSize);
      const long y = static_cast<long>(p / kImageSize);
      color = texture_color(sc, x - obj.cx, y - obj.cy);
      for (double& ch : color) ch += 0.03 * (2.0 * rng.uniform() - 1.0);
      scene.masks[static_cast<std::size_t>(o)].labels[p] = LabelMask::kForeground;
    }
    for (std::size_t ch = 0; ch < 3; ++ch) {
      scene.image.set(ch * plane + p, std::clamp(color[ch], 0.0, 1.0));
    }
  }
  return scene;
}

namespace {

SamplePair render_episode_scene(int target_class, Rng& rng) {
  // Redraw until the target mask survives reduction to the feature grid.
  for (int attempt = 0; attempt < 64; ++attempt) {
    const std::size_t n_distract = 1 + rng.bounded(2);
    std::vector<int> ids;
    std::vector<int> pool;
    for (int c = 0; c < kNumClasses; ++c) {
      if (c != target_class) pool.push_back(c);
    }
    for (std::size_t i = 0; i < n_distract; ++i) {
      const std::size_t pick = rng.bounded(pool.size());
      ids.push_back(pool[pick]);
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    ids.push_back(target_class);  // drawn last, never fully occluded

    Scene scene = generate_scene(ids, rng);
    LabelMask mask = std::move(scene.masks.back());
    if (mask.count(LabelMask::kForeground) == 0) continue;
    const LabelMask reduced = downsample_nearest(mask, kFeatureSize, kFeatureSize);
    if (reduced.count(LabelMask::kForeground) == 0) continue;
    return SamplePair{std::move(scene.image), std::move(mask)};
  }
  throw EmptyRegionError("render_episode_scene: could not place a visible target");
}

}  // namespace

Episode sample_episode(const FoldSplit& split, Phase phase, std::size_t k, Rng& rng) {
  const std::vector<int>& classes =
      phase == Phase::Train ? split.train_classes : split.test_classes;
  if (classes.empty()) throw ConfigError("fold: phase class set is empty");
  const int target = classes[rng.bounded(classes.size())];
  return sample_episode_of(target, k, rng);
}

Episode sample_episode_of(int class_id, std::size_t k, Rng& rng) {
  if (k < 1) throw ConfigError("k: must be >= 1");
  Episode ep;
  ep.class_id = class_id;
  ep.supports.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    ep.supports.push_back(render_episode_scene(class_id, rng));
  }
  ep.query = render_episode_scene(class_id, rng);
  return ep;
}

Prototype kshot_average(const std::vector<Prototype>& protos) {
  if (protos.empty()) throw DimensionError("kshot_average: no prototypes");
  const std::size_t c = protos.front().channels();
  std::vector<double> mean(c, 0.0);
  for (std::size_t i = 0; i < protos.size(); ++i) {
    if (protos[i].channels() != c) {
      throw DimensionError("kshot_average: prototype lengths differ");
    }
    const double inv = 1.0 / static_cast<double>(i + 1);
    for (std::size_t ch = 0; ch < c; ++ch) {
      mean[ch] += (protos[i].at(ch) - mean[ch]) * inv;
    }
  }
  Prototype out;
  out.values = Tensor({c}, std::move(mean));
  return out;
}

PriorMask kshot_average(const std::vector<PriorMask>& priors) {
  if (priors.empty()) throw DimensionError("kshot_average: no priors");
  const std::size_t h = priors.front().height, w = priors.front().width;
  std::vector<double> mean(h * w, 0.0);
  for (std::size_t i = 0; i < priors.size(); ++i) {
    if (priors[i].height != h || priors[i].width != w) {
      throw DimensionError("kshot_average: prior grids differ");
    }
    const double inv = 1.0 / static_cast<double>(i + 1);
    for (std::size_t p = 0; p < h * w; ++p) {
      mean[p] += (priors[i].at_pos(p) - mean[p]) * inv;
    }
  }
  PriorMask out;
  out.height = h;
  out.width = w;
  out.values = Tensor({h, w}, std::move(mean));
  return out;
}

std::pair<Prototype, PriorMask> kshot_average(const std::vector<Prototype>& protos,
                                              const std::vector<PriorMask>& priors) {
  if (protos.size() != priors.size()) {
    throw DimensionError("kshot_average: prototype/prior counts differ");
  }
  return {kshot_average(protos), kshot_average(priors)};
}

LabelMask kshot_vote(const std::vector<LabelMask>& pred_masks, std::size_t k) {
  if (pred_masks.empty()) throw DimensionError("kshot_vote: no predictions");
  if (k < 1 || k > pred_masks.size()) {
    throw ConfigError("k: vote threshold must lie in [1, " +
                      std::to_string(pred_masks.size()) + "], got " + std::to_string(k));
  }
  const std::size_t h = pred_masks.front().height, w = pred_masks.front().width;
  LabelMask out(h, w);
  for (const LabelMask& m : pred_masks) {
    if (m.height != h || m.width != w) {
      throw DimensionError("kshot_vote: prediction grids differ");
    }
    for (std::uint8_t v : m.labels) {
      if (v == LabelMask::kIgnore) {
        throw DimensionError("kshot_vote: predictions must be binary");
      }
    }
  }
  for (std::size_t p = 0; p < h * w; ++p) {
    std::size_t votes = 0;
    for (const LabelMask& m : pred_masks) {
      if (m.at_pos(p) == LabelMask::kForeground) ++votes;
    }
    out.labels[p] = votes >= k ? LabelMask::kForeground : LabelMask::kBackground;
  }
  return out;
}

}  // namespace celp
