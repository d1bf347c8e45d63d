#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "embryosim/guide.hpp"
#include "embryosim/spatial_index.hpp"
#include "embryosim/vec3.hpp"

namespace embryosim {

struct SimObject {
  std::int64_t id = 0;
  Vec3 position;
  double radius = 0.0;    // µm
  int cycle_length = 1;   // frames
  int cycle_state = 1;    // 1 <= cycle_state <= cycle_length
  int video_id = 1;       // 1-based into the object-video library
  std::optional<std::int64_t> parent_id;
  int birth_frame = 0;

  friend bool operator==(const SimObject&, const SimObject&) = default;
};

struct PopulationState {
  int frame_index = 0;
  std::vector<SimObject> objects;  // ascending by id
  std::int64_t next_id = 1;

  friend bool operator==(const PopulationState&, const PopulationState&) = default;
};

enum class DivisionVariant { fixed_cycle, count_coupled_oldest, count_coupled_density };

std::string to_string(DivisionVariant v);
DivisionVariant division_variant_from_string(const std::string& s);

struct DivisionModel {
  DivisionVariant variant = DivisionVariant::count_coupled_density;
  double p = 0.5;
  double density_radius = 40.0;  // r_rho, µm
};

// Defaults are the zebrafish run parameters; l_max is not published and is a
// project default.
struct DynamicsConfig {
  double w_dir = 1.0;
  double w_rep = 1.0;
  double w_nna = 0.1;
  int k_neighbors = 10;
  double r_min = 7.0;
  double r_max = 10.0;
  int l_min = 28;
  int l_max = 40;
  std::uint64_t seed = 0;
  int video_count = 1;  // N_ov
};

void validate(const DynamicsConfig& cfg);
void validate(const DivisionModel& model);

// Fraction of the guide frame-0 population, or an absolute object count.
struct InitialFraction {
  double p;
};
struct InitialCount {
  int count;
};
using InitialPopulation = std::variant<InitialFraction, InitialCount>;

PopulationState initialize_population(const GuideSequence& guide, const InitialPopulation& init,
                                      const DynamicsConfig& cfg);

// Mean displacement of the K nearest guide cells around x. The guide index
// must carry guide cell ids; `guide_displacements` maps those ids to d_j.
class GuideFrameIndex {
 public:
  explicit GuideFrameIndex(const GuideFrame& frame);

  const SpatialIndex& index() const { return index_; }
  const Vec3& displacement_of(std::int64_t id) const;
  std::size_t size() const { return index_.size(); }

 private:
  SpatialIndex index_;
  std::vector<std::pair<std::int64_t, Vec3>> displacements_;  // sorted by id
};

Vec3 directed_displacement(const Vec3& x, const GuideFrameIndex& guide, int k);

// Pairwise repulsion for d = x_j - x_i with R_N = r_i + r_j and R_M = 2 R_N.
// `contact_direction` stands in for d/|d| when the centroids coincide.
Vec3 repulsive_displacement(const Vec3& d, double r_i, double r_j,
                            const Vec3& contact_direction = Vec3{1.0, 0.0, 0.0});

// Vector from x to the nearest other simulated object; zero if none.
Vec3 nna_displacement(const Vec3& x, const SpatialIndex& sim_index, std::int64_t self_id);

// Nearest-neighbor attraction term of the total displacement:
// min(w_nna, |dir| / |nna|) * nna, or zero when nna is zero.
Vec3 clamped_attraction(const Vec3& directed, const Vec3& nna, double w_nna);

// Unit vector shared by a coincident pair (a, b); the object with the lower
// id uses it as-is and the other uses its negation.
Vec3 contact_direction(std::uint64_t seed, int frame, std::int64_t id_a, std::int64_t id_b);

struct SimulationSnapshot {
  const GuideFrameIndex& guide;
  const SpatialIndex& sim_index;
  std::span<const SimObject> objects;  // ascending by id; looked up for radii
  int frame = 0;
};

Vec3 total_displacement(const SimObject& object, const SimulationSnapshot& snapshot,
                        const DynamicsConfig& cfg);

double density_difference(const SimObject& object, const SpatialIndex& guide_index,
                          std::size_t n_embryo, const SpatialIndex& sim_index, std::size_t n_sim,
                          double density_radius);

// max(0, round_half_up(p * n_embryo) - n_sim)
int required_divisions(double p, std::size_t n_embryo, std::size_t n_sim);
std::int64_t round_half_up(double v);

struct DivisionSelection {
  std::vector<std::int64_t> ids;  // ascending
  int shortfall = 0;
};

// Chooses which objects divide this frame. For the count-coupled variants,
// objects whose cycle has ended are taken first and count against n_div;
// the rest of the budget goes to eligible objects (cycle_state >= l_min)
// ranked by the variant's criterion.
DivisionSelection select_division_candidates(const PopulationState& state,
                                             const DivisionModel& model,
                                             const GuideFrameIndex& guide, int n_div,
                                             const DynamicsConfig& cfg);

// Replaces `id` by two daughters at x +- (r/2) * axis. Daughter positions are
// clamped to `bounds`.
PopulationState perform_division(const PopulationState& state, std::int64_t id,
                                 const Vec3& division_axis, const DynamicsConfig& cfg,
                                 const Box& bounds);

struct DivisionEvent {
  std::int64_t mother = 0;
  std::int64_t daughter_a = 0;
  std::int64_t daughter_b = 0;
};

struct StepReport {
  int frame = 0;  // frame reached by the step
  std::size_t n_embryo = 0;
  std::size_t n_sim_before = 0;
  std::size_t n_sim_after = 0;
  int divisions_requested = 0;
  int divisions_performed = 0;
  int shortfall = 0;
  std::vector<DivisionEvent> divisions;
};

struct StepOptions {
  // Principal axis of each video's last frame, indexed by video_id - 1.
  // Empty means division axes are drawn at random.
  std::span<const Vec3> video_axes;
  int threads = 1;
};

PopulationState step(const PopulationState& state, const GuideSequence& guide,
                     const DivisionModel& model, const DynamicsConfig& cfg,
                     const StepOptions& options = {}, StepReport* report = nullptr);

}  // namespace embryosim
