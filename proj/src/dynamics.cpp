#include "embryosim/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "embryosim/errors.hpp"
#include "embryosim/parallel.hpp"
#include "embryosim/rng.hpp"

namespace embryosim {
namespace {

const SimObject* find_object(std::span<const SimObject> objects, std::int64_t id) {
  auto it = std::lower_bound(objects.begin(), objects.end(), id,
                             [](const SimObject& o, std::int64_t v) { return o.id < v; });
  return (it != objects.end() && it->id == id) ? &*it : nullptr;
}

std::vector<IndexedPoint> object_points(std::span<const SimObject> objects) {
  std::vector<IndexedPoint> pts;
  pts.reserve(objects.size());
  for (const auto& o : objects) pts.push_back({o.id, o.position});
  return pts;
}

// Fresh radius, cycle length and video for object `id`; cycle state is left
// to the caller.
void draw_attributes(SimObject& o, const DynamicsConfig& cfg) {
  RandomStream rng(cfg.seed, StreamPurpose::object_attributes, static_cast<std::uint64_t>(o.id));
  o.radius = rng.uniform(cfg.r_min, cfg.r_max);
  o.cycle_length = static_cast<int>(rng.uniform_int(std::max(1, cfg.l_min), cfg.l_max));
  o.cycle_state = static_cast<int>(rng.uniform_int(1, o.cycle_length));
  o.video_id = static_cast<int>(rng.uniform_int(1, cfg.video_count));
}

}  // namespace

std::string to_string(DivisionVariant v) {
  switch (v) {
    case DivisionVariant::fixed_cycle:
      return "fixed_cycle";
    case DivisionVariant::count_coupled_oldest:
      return "oldest";
    case DivisionVariant::count_coupled_density:
      return "density";
  }
  return "?";
}

DivisionVariant division_variant_from_string(const std::string& s) {
  if (s == "fixed_cycle") return DivisionVariant::fixed_cycle;
  if (s == "oldest") return DivisionVariant::count_coupled_oldest;
  if (s == "density") return DivisionVariant::count_coupled_density;
  throw ValidationError("division.model must be one of fixed_cycle, oldest, density (got '" + s +
                        "')");
}

void validate(const DynamicsConfig& cfg) {
  if (!(cfg.w_dir >= 0.0)) throw ValidationError("dynamics.w_dir must be >= 0");
  if (!(cfg.w_rep >= 0.0)) throw ValidationError("dynamics.w_rep must be >= 0");
  if (!(cfg.w_nna >= 0.0)) throw ValidationError("dynamics.w_nna must be >= 0");
  if (cfg.k_neighbors < 1) throw ValidationError("dynamics.K must be >= 1");
  if (!(cfg.r_min > 0.0 && cfg.r_min <= cfg.r_max)) {
    throw ValidationError("dynamics: need 0 < r_min <= r_max");
  }
  if (cfg.l_min < 0 || cfg.l_max < 1 || cfg.l_min > cfg.l_max) {
    throw ValidationError("dynamics: need 0 <= l_min <= l_max and l_max >= 1");
  }
  if (cfg.video_count < 1) throw ValidationError("dynamics: at least one object video required");
}

void validate(const DivisionModel& model) {
  if (!(model.p >= 0.0 && model.p <= 1.0)) throw ValidationError("division.p must be in [0, 1]");
  if (model.variant == DivisionVariant::count_coupled_density && !(model.density_radius > 0.0)) {
    throw ValidationError("division.r_rho must be > 0");
  }
}

PopulationState initialize_population(const GuideSequence& guide, const InitialPopulation& init,
                                      const DynamicsConfig& cfg) {
  validate(cfg);
  if (guide.frames.empty() || guide.frames.front().cells.empty()) {
    throw ValidationError("initialize_population: guide frame 0 is empty");
  }
  const auto& cells = guide.frames.front().cells;
  const std::size_t available = cells.size();
  std::size_t n = 0;
  if (const auto* f = std::get_if<InitialFraction>(&init)) {
    if (!(f->p > 0.0 && f->p <= 1.0)) throw ValidationError("initial fraction must be in (0, 1]");
    n = static_cast<std::size_t>(round_half_up(f->p * static_cast<double>(available)));
    if (n == 0) throw ValidationError("initial fraction selects zero objects");
  } else {
    const int count = std::get<InitialCount>(init).count;
    if (count < 1) throw ValidationError("initial count must be >= 1");
    n = static_cast<std::size_t>(count);
  }
  if (n > available) {
    throw ValidationError("initial count " + std::to_string(n) + " exceeds the " +
                          std::to_string(available) + " guide cells of frame 0");
  }

  // Partial Fisher-Yates: the first n slots are a uniform sample without
  // replacement.
  std::vector<std::size_t> order(available);
  for (std::size_t i = 0; i < available; ++i) order[i] = i;
  RandomStream rng(cfg.seed, StreamPurpose::initial_selection);
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(available) - 1));
    std::swap(order[i], order[j]);
  }

  PopulationState state;
  state.objects.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    SimObject o;
    o.id = static_cast<std::int64_t>(i) + 1;
    o.position = cells[order[i]].position;
    o.birth_frame = 0;
    draw_attributes(o, cfg);
    state.objects.push_back(o);
  }
  state.next_id = static_cast<std::int64_t>(n) + 1;
  return state;
}

GuideFrameIndex::GuideFrameIndex(const GuideFrame& frame)
    : index_([&] {
        std::vector<IndexedPoint> pts;
        pts.reserve(frame.cells.size());
        for (const auto& c : frame.cells) pts.push_back({c.id, c.position});
        return SpatialIndex(pts);
      }()) {
  displacements_.reserve(frame.cells.size());
  for (const auto& c : frame.cells) displacements_.emplace_back(c.id, c.displacement);
  std::sort(displacements_.begin(), displacements_.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
}

const Vec3& GuideFrameIndex::displacement_of(std::int64_t id) const {
  auto it = std::lower_bound(displacements_.begin(), displacements_.end(), id,
                             [](const auto& e, std::int64_t v) { return e.first < v; });
  if (it == displacements_.end() || it->first != id) {
    throw std::out_of_range("guide cell " + std::to_string(id) + " not indexed");
  }
  return it->second;
}

Vec3 directed_displacement(const Vec3& x, const GuideFrameIndex& guide, int k) {
  const auto neighbors = guide.index().knn(x, k);
  Vec3 sum;
  for (const auto& n : neighbors) sum += guide.displacement_of(n.id);
  return sum / static_cast<double>(neighbors.size());
}

Vec3 repulsive_displacement(const Vec3& d, double r_i, double r_j,
                            const Vec3& contact_direction) {
  const double r_n = r_i + r_j;
  const double r_m = 2.0 * r_n;
  const double c = (1.0 - r_n / r_m) * (1.0 - r_n / r_m) - 1.0;
  const double dist = norm(d);
  if (dist == 0.0) return -contact_direction;  // branch-1 limit: magnitude 1
  const Vec3 dir = d / dist;
  if (dist <= r_n) return -(c * dist / r_n + 1.0) * dir;
  if (dist <= r_m) {
    const double f = 1.0 - dist / r_m;
    return -(f * f) * dir;
  }
  return {};
}

Vec3 nna_displacement(const Vec3& x, const SpatialIndex& sim_index, std::int64_t self_id) {
  const auto nearest = sim_index.knn(x, 1, self_id);
  if (nearest.empty()) return {};
  return nearest.front().position - x;
}

Vec3 clamped_attraction(const Vec3& directed, const Vec3& nna, double w_nna) {
  const double nna_norm = norm(nna);
  if (nna_norm == 0.0) return {};
  return std::min(w_nna, norm(directed) / nna_norm) * nna;
}

Vec3 contact_direction(std::uint64_t seed, int frame, std::int64_t id_a, std::int64_t id_b) {
  const std::int64_t lo = std::min(id_a, id_b);
  const std::int64_t hi = std::max(id_a, id_b);
  RandomStream rng(seed, StreamPurpose::contact_direction, static_cast<std::uint64_t>(frame),
                   static_cast<std::uint64_t>(lo), static_cast<std::uint64_t>(hi));
  const Vec3 u = rng.unit_vector();
  return id_a == lo ? u : -u;
}

Vec3 total_displacement(const SimObject& object, const SimulationSnapshot& snapshot,
                        const DynamicsConfig& cfg) {
  const Vec3 directed = directed_displacement(object.position, snapshot.guide, cfg.k_neighbors);

  Vec3 repulsion;
  if (cfg.w_rep > 0.0) {
    // R_M = 2 (r_i + r_j) <= 4 r_max bounds every interacting pair.
    for (const auto& n : snapshot.sim_index.range(object.position, 4.0 * cfg.r_max, object.id)) {
      const SimObject* other = find_object(snapshot.objects, n.id);
      if (other == nullptr) throw std::logic_error("sim index out of sync with objects");
      const Vec3 d = n.position - object.position;
      const Vec3 contact = norm(d) == 0.0
                               ? contact_direction(cfg.seed, snapshot.frame, object.id, other->id)
                               : Vec3{};
      repulsion += repulsive_displacement(d, object.radius, other->radius, contact);
    }
  }

  Vec3 attraction;
  if (cfg.w_nna > 0.0) {
    attraction = clamped_attraction(
        directed, nna_displacement(object.position, snapshot.sim_index, object.id), cfg.w_nna);
  }
  return cfg.w_dir * directed + cfg.w_rep * repulsion + attraction;
}

double density_difference(const SimObject& object, const SpatialIndex& guide_index,
                          std::size_t n_embryo, const SpatialIndex& sim_index, std::size_t n_sim,
                          double density_radius) {
  const double rho_embryo =
      static_cast<double>(guide_index.range_count(object.position, density_radius));
  const double rho_sim =
      static_cast<double>(sim_index.range_count(object.position, density_radius, object.id));
  return rho_embryo / static_cast<double>(n_embryo) - rho_sim / static_cast<double>(n_sim);
}

std::int64_t round_half_up(double v) { return static_cast<std::int64_t>(std::floor(v + 0.5)); }

int required_divisions(double p, std::size_t n_embryo, std::size_t n_sim) {
  const std::int64_t target = round_half_up(p * static_cast<double>(n_embryo));
  return static_cast<int>(std::max<std::int64_t>(0, target - static_cast<std::int64_t>(n_sim)));
}

DivisionSelection select_division_candidates(const PopulationState& state,
                                             const DivisionModel& model,
                                             const GuideFrameIndex& guide, int n_div,
                                             const DynamicsConfig& cfg) {
  DivisionSelection sel;
  const auto& objects = state.objects;

  if (model.variant == DivisionVariant::fixed_cycle) {
    for (const auto& o : objects) {
      if (o.cycle_state >= o.cycle_length) sel.ids.push_back(o.id);
    }
    return sel;
  }
  if (n_div <= 0 || objects.empty()) return sel;

  struct Ranked {
    const SimObject* object;
    double score;  // density difference; unused for the oldest variant
    bool ready;
  };
  std::vector<Ranked> eligible;
  const bool density = model.variant == DivisionVariant::count_coupled_density;
  std::optional<SpatialIndex> sim_index;
  if (density) sim_index.emplace(object_points(objects));
  for (const auto& o : objects) {
    const bool ready = o.cycle_state >= o.cycle_length;
    if (!ready && o.cycle_state < cfg.l_min) continue;
    const double score = density ? density_difference(o, guide.index(), guide.size(), *sim_index,
                                                      objects.size(), model.density_radius)
                                 : 0.0;
    eligible.push_back({&o, score, ready});
  }

  auto better = [density](const Ranked& a, const Ranked& b) {
    if (a.ready != b.ready) return a.ready;
    if (density && a.score != b.score) return a.score > b.score;
    if (a.object->cycle_state != b.object->cycle_state) {
      return a.object->cycle_state > b.object->cycle_state;
    }
    return a.object->id < b.object->id;
  };
  const std::size_t take = std::min<std::size_t>(eligible.size(), static_cast<std::size_t>(n_div));
  std::partial_sort(eligible.begin(), eligible.begin() + static_cast<std::ptrdiff_t>(take),
                    eligible.end(), better);
  for (std::size_t i = 0; i < take; ++i) sel.ids.push_back(eligible[i].object->id);
  std::sort(sel.ids.begin(), sel.ids.end());
  sel.shortfall = n_div - static_cast<int>(take);
  return sel;
}

PopulationState perform_division(const PopulationState& state, std::int64_t id,
                                 const Vec3& division_axis, const DynamicsConfig& cfg,
                                 const Box& bounds) {
  const SimObject* mother = find_object(state.objects, id);
  if (mother == nullptr) {
    throw std::invalid_argument("perform_division: unknown object id " + std::to_string(id));
  }
  const Vec3 offset = (mother->radius / 2.0) * division_axis;
  PopulationState next;
  next.frame_index = state.frame_index;
  next.next_id = state.next_id + 2;
  next.objects.reserve(state.objects.size() + 1);
  for (const auto& o : state.objects) {
    if (o.id != id) next.objects.push_back(o);
  }
  for (int side = 0; side < 2; ++side) {
    SimObject d;
    d.id = state.next_id + side;
    d.position = bounds.clamp(side == 0 ? mother->position + offset : mother->position - offset);
    d.parent_id = mother->id;
    d.birth_frame = state.frame_index;
    draw_attributes(d, cfg);
    d.cycle_state = 1;
    next.objects.push_back(d);
  }
  return next;
}

PopulationState step(const PopulationState& state, const GuideSequence& guide,
                     const DivisionModel& model, const DynamicsConfig& cfg,
                     const StepOptions& options, StepReport* report) {
  const int k = state.frame_index;
  if (k < 0 || static_cast<std::size_t>(k) + 1 >= guide.frames.size()) {
    throw std::out_of_range("step: frame " + std::to_string(k) +
                            " is the last guide frame (guide has " +
                            std::to_string(guide.frames.size()) + " frames)");
  }

  // (1)-(2) displacements from the frame-k snapshot.
  const GuideFrameIndex guide_now(guide.frames[k]);
  std::vector<Vec3> moves(state.objects.size());
  if (!state.objects.empty()) {
    const auto pts = object_points(state.objects);
    const SpatialIndex sim_index(pts);
    const SimulationSnapshot snapshot{guide_now, sim_index, state.objects, k};
    parallel_for(state.objects.size(), options.threads, [&](std::size_t i) {
      moves[i] = total_displacement(state.objects[i], snapshot, cfg);
    });
  }

  // (3)-(4) apply together, clamp, advance cycle states.
  PopulationState next = state;
  next.frame_index = k + 1;
  for (std::size_t i = 0; i < next.objects.size(); ++i) {
    SimObject& o = next.objects[i];
    o.position = guide.bounds.clamp(o.position + moves[i]);
    o.cycle_state += 1;
  }

  // (5) divisions against guide frame k+1.
  const GuideFrameIndex guide_next(guide.frames[k + 1]);
  const std::size_t n_embryo = guide_next.size();
  const std::size_t n_before = next.objects.size();
  const bool count_coupled = model.variant != DivisionVariant::fixed_cycle;
  const int n_div = count_coupled ? required_divisions(model.p, n_embryo, n_before) : 0;
  const DivisionSelection sel = select_division_candidates(next, model, guide_next, n_div, cfg);

  StepReport rep;
  rep.frame = k + 1;
  rep.n_embryo = n_embryo;
  rep.n_sim_before = n_before;
  rep.divisions_requested = count_coupled ? n_div : static_cast<int>(sel.ids.size());
  rep.shortfall = sel.shortfall;

  for (std::int64_t id : sel.ids) {
    const SimObject* mother = find_object(next.objects, id);
    Vec3 axis;
    const auto video = static_cast<std::size_t>(mother->video_id - 1);
    if (video < options.video_axes.size() && norm(options.video_axes[video]) > 0.0) {
      axis = options.video_axes[video] / norm(options.video_axes[video]);
    } else {
      axis = RandomStream(cfg.seed, StreamPurpose::division_axis, static_cast<std::uint64_t>(id))
                 .unit_vector();
    }
    const std::int64_t first_daughter = next.next_id;
    next = perform_division(next, id, axis, cfg, guide.bounds);
    rep.divisions.push_back({id, first_daughter, first_daughter + 1});
  }
  std::sort(next.objects.begin(), next.objects.end(),
            [](const SimObject& a, const SimObject& b) { return a.id < b.id; });

  // Objects whose cycle ended but that were not given a division slot wait
  // at the end of their cycle.
  for (auto& o : next.objects) o.cycle_state = std::min(o.cycle_state, o.cycle_length);

  rep.divisions_performed = static_cast<int>(rep.divisions.size());
  rep.n_sim_after = next.objects.size();
  if (report != nullptr) *report = std::move(rep);
  return next;
}

}  // namespace embryosim
