#include "embryosim/config.hpp"

#include <fstream>
#include <set>

#include "embryosim/errors.hpp"
#include "embryosim/text.hpp"

namespace embryosim {

using nlohmann::json;

namespace {

// Reads fields out of one JSON object, remembering which keys were consumed
// so that leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError(where() + " must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <typename T>
  T get(const std::string& key, T fallback) {
    used_.insert(key);
    if (!j_.contains(key)) return fallback;
    return read<T>(key);
  }
  template <typename T>
  T require(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) throw ValidationError(name(key) + " is required");
    return read<T>(key);
  }
  Section child(const std::string& key) {
    used_.insert(key);
    return Section(j_.at(key), name(key));
  }
  Vec3 vec3(const std::string& key, Vec3 fallback) {
    used_.insert(key);
    if (!j_.contains(key)) return fallback;
    const auto v = read<std::vector<double>>(key);
    if (v.size() != 3) throw ValidationError(name(key) + " must have 3 entries");
    return {v[0], v[1], v[2]};
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!used_.count(key)) throw ValidationError("unknown config key " + name(key));
    }
  }

  std::string name(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }
  std::string where() const { return path_.empty() ? "config" : path_; }

 private:
  template <typename T>
  T read(const std::string& key) {
    const json& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, int> || std::is_same_v<T, std::uint64_t>) {
        if (!v.is_number_integer()) throw ValidationError(name(key) + " must be an integer");
      } else if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ValidationError(name(key) + " must be a number");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ValidationError(name(key) + " must be a boolean");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ValidationError(name(key) + " must be a string");
      }
      if constexpr (std::is_same_v<T, std::uint64_t>) {
        if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
          throw ValidationError(name(key) + " must be non-negative");
        }
      }
      return v.get<T>();
    } catch (const json::exception& e) {
      throw ValidationError(name(key) + ": " + e.what());
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void require_exactly_one(const Section& s, const std::string& a, const std::string& b) {
  const bool ha = s.has(a), hb = s.has(b);
  if (ha == hb) {
    throw ValidationError(s.where() + " must set exactly one of " + s.name(a) + " and " +
                          s.name(b));
  }
}

GuideGeneratorSpec parse_guide_generator(Section s) {
  GuideGeneratorSpec g;
  g.frames = s.get("frames", g.frames);
  g.initial_cells = s.get("initial_cells", g.initial_cells);
  g.growth = s.get("growth", g.growth);
  g.shell_radius = s.get("shell_radius", g.shell_radius);
  g.shell_thickness = s.get("shell_thickness", g.shell_thickness);
  g.start_angle_deg = s.get("start_angle_deg", g.start_angle_deg);
  g.end_angle_deg = s.get("end_angle_deg", g.end_angle_deg);
  g.jitter = s.get("jitter", g.jitter);
  s.finish();
  validate(g);
  return g;
}

json guide_generator_json(const GuideGeneratorSpec& g) {
  return {{"frames", g.frames},
          {"initial_cells", g.initial_cells},
          {"growth", g.growth},
          {"shell_radius", g.shell_radius},
          {"shell_thickness", g.shell_thickness},
          {"start_angle_deg", g.start_angle_deg},
          {"end_angle_deg", g.end_angle_deg},
          {"jitter", g.jitter}};
}

}  // namespace

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ValidationError("override '" + assignment + "' must have the form key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = raw;

  json* node = &doc;
  const auto parts = text::split(key, '.');
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string part(parts[i]);
    if (part.empty()) throw ValidationError("override key '" + key + "' has an empty component");
    if (!node->is_object()) {
      throw ValidationError("override key '" + key + "' descends into a non-object");
    }
    if (i + 1 == parts.size()) {
      (*node)[part] = value;
    } else {
      if (!node->contains(part)) (*node)[part] = json::object();
      node = &(*node)[part];
    }
  }
}

SimulationConfig config_from_json(const json& doc, const std::filesystem::path& base_dir) {
  SimulationConfig cfg;
  cfg.base_dir = base_dir;
  Section root(doc, "");
  cfg.seed = root.get<std::uint64_t>("seed", 0);
  if (root.has("output")) cfg.output = root.require<std::string>("output");

  // guide
  {
    if (!root.has("guide")) throw ValidationError("guide is required");
    Section g = root.child("guide");
    require_exactly_one(g, "file", "generator");
    if (g.has("file")) {
      cfg.guide = GuideFile{g.require<std::string>("file")};
    } else {
      cfg.guide = parse_guide_generator(g.child("generator"));
    }
    g.finish();
  }

  // population
  if (root.has("population")) {
    Section p = root.child("population");
    require_exactly_one(p, "p", "count");
    if (p.has("p")) {
      const double frac = p.require<double>("p");
      if (!(frac > 0.0 && frac <= 1.0)) throw ValidationError("population.p must be in (0, 1]");
      cfg.population = InitialFraction{frac};
    } else {
      const int count = p.require<int>("count");
      if (count < 1) throw ValidationError("population.count must be >= 1");
      cfg.population = InitialCount{count};
    }
    p.finish();
  }

  // dynamics
  {
    DynamicsConfig& d = cfg.dynamics;
    if (root.has("dynamics")) {
      Section s = root.child("dynamics");
      d.w_dir = s.get("w_dir", d.w_dir);
      d.w_rep = s.get("w_rep", d.w_rep);
      d.w_nna = s.get("w_nna", d.w_nna);
      d.k_neighbors = s.get("K", d.k_neighbors);
      d.r_min = s.get("r_min", d.r_min);
      d.r_max = s.get("r_max", d.r_max);
      d.l_min = s.get("l_min", d.l_min);
      d.l_max = s.get("l_max", d.l_max);
      s.finish();
    }
    d.seed = cfg.seed;
    validate(d);
  }

  // division
  {
    DivisionModel& m = cfg.division;
    std::optional<double> p;
    if (root.has("division")) {
      Section s = root.child("division");
      m.variant = division_variant_from_string(s.get<std::string>("model", "density"));
      if (s.has("p")) p = s.require<double>("p");
      m.density_radius = s.get("r_rho", m.density_radius);
      s.finish();
    }
    if (p) {
      m.p = *p;
    } else if (const auto* f = std::get_if<InitialFraction>(&cfg.population)) {
      m.p = f->p;
    } else if (m.variant != DivisionVariant::fixed_cycle) {
      throw ValidationError("division.p is required when population.count is used");
    }
    validate(m);
  }

  // volume
  if (root.has("volume")) {
    Section s = root.child("volume");
    if (s.has("dims")) {
      const auto v = s.require<std::vector<int>>("dims");
      if (v.size() != 3 || v[0] < 1 || v[1] < 1 || v[2] < 1) {
        throw ValidationError("volume.dims must be 3 positive integers");
      }
      cfg.volume.dims = Dims{v[0], v[1], v[2]};
    }
    cfg.volume.spacing = s.vec3("spacing", cfg.volume.spacing);
    if (!(cfg.volume.spacing.x > 0 && cfg.volume.spacing.y > 0 && cfg.volume.spacing.z > 0)) {
      throw ValidationError("volume.spacing must be positive");
    }
    if (s.has("origin")) cfg.volume.origin = s.vec3("origin", {});
    s.finish();
  }

  // acquisition
  if (root.has("acquisition")) {
    AcquisitionSettings& a = cfg.acquisition;
    Section s = root.child("acquisition");
    if (s.has("psf")) {
      Section p = s.child("psf");
      require_exactly_one(p, "file", "gaussian");
      if (p.has("file")) {
        a.psf = PsfFile{p.require<std::string>("file")};
      } else {
        Section gsec = p.child("gaussian");
        GaussianPsf gp;
        gp.sigma_xy = gsec.get("sigma_xy", gp.sigma_xy);
        gp.sigma_z = gsec.get("sigma_z", gp.sigma_z);
        gsec.finish();
        if (!(gp.sigma_xy > 0 && gp.sigma_z > 0)) {
          throw ValidationError("acquisition.psf.gaussian sigmas must be > 0");
        }
        a.psf = gp;
      }
      p.finish();
    }
    a.dark_offset = s.get("dark_offset", a.dark_offset);
    if (s.has("dark_image")) a.dark_image = s.require<std::string>("dark_image");
    a.sigma_agn = s.get("sigma_agn", a.sigma_agn);
    a.shot_noise = s.get("shot_noise", a.shot_noise);
    a.attenuation = attenuation_from_string(s.get<std::string>("attenuation", "forward"));
    a.multiview = s.get("multiview", a.multiview);
    a.bits = s.get("bits", a.bits);
    s.finish();
    if (!(a.dark_offset >= 0.0)) throw ValidationError("acquisition.dark_offset must be >= 0");
    if (!(a.sigma_agn >= 0.0)) throw ValidationError("acquisition.sigma_agn must be >= 0");
    if (a.bits < 1 || a.bits > 16) throw ValidationError("acquisition.bits must be in [1, 16]");
  }

  // videos
  if (root.has("videos")) {
    Section s = root.child("videos");
    require_exactly_one(s, "directory", "generator");
    if (s.has("directory")) {
      cfg.videos = VideoDirectory{s.require<std::string>("directory")};
    } else {
      Section gsec = s.child("generator");
      VideoGenerator vg;
      vg.count = gsec.get("count", vg.count);
      vg.spec.frames = gsec.get("frames", vg.spec.frames);
      vg.spec.base_radius = gsec.get("base_radius", vg.spec.base_radius);
      vg.spec.intensity = gsec.get("intensity", vg.spec.intensity);
      gsec.finish();
      if (vg.count < 1) throw ValidationError("videos.generator.count must be >= 1");
      validate(vg.spec);
      cfg.videos = vg;
    }
    s.finish();
  }

  if (root.has("frames")) {
    const auto v = root.require<std::vector<int>>("frames");
    if (v.size() != 2 || v[0] < 0 || v[1] < v[0]) {
      throw ValidationError("frames must be [first, last] with 0 <= first <= last");
    }
    cfg.frames = FrameRange{v[0], v[1]};
  }

  root.finish();
  return cfg;
}

SimulationConfig parse_config(const std::filesystem::path& path,
                              const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  json doc = json::parse(in, nullptr, /*allow_exceptions=*/false, /*ignore_comments=*/true);
  if (doc.is_discarded()) throw ParseError(path.string() + ": not a valid JSON document");
  for (const auto& o : overrides) apply_override(doc, o);
  return config_from_json(doc, path.parent_path());
}

json config_to_json(const SimulationConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  if (cfg.output) j["output"] = cfg.output->string();

  if (const auto* f = std::get_if<GuideFile>(&cfg.guide)) {
    j["guide"] = {{"file", f->path.string()}};
  } else {
    j["guide"] = {{"generator", guide_generator_json(std::get<GuideGeneratorSpec>(cfg.guide))}};
  }

  if (const auto* f = std::get_if<InitialFraction>(&cfg.population)) {
    j["population"] = {{"p", f->p}};
  } else {
    j["population"] = {{"count", std::get<InitialCount>(cfg.population).count}};
  }

  const auto& d = cfg.dynamics;
  j["dynamics"] = {{"w_dir", d.w_dir}, {"w_rep", d.w_rep}, {"w_nna", d.w_nna},
                   {"K", d.k_neighbors}, {"r_min", d.r_min}, {"r_max", d.r_max},
                   {"l_min", d.l_min},   {"l_max", d.l_max}};
  j["division"] = {{"model", to_string(cfg.division.variant)},
                   {"p", cfg.division.p},
                   {"r_rho", cfg.division.density_radius}};

  json vol;
  if (cfg.volume.dims) vol["dims"] = {cfg.volume.dims->x, cfg.volume.dims->y, cfg.volume.dims->z};
  vol["spacing"] = {cfg.volume.spacing.x, cfg.volume.spacing.y, cfg.volume.spacing.z};
  if (cfg.volume.origin) vol["origin"] = {cfg.volume.origin->x, cfg.volume.origin->y, cfg.volume.origin->z};
  j["volume"] = vol;

  const auto& a = cfg.acquisition;
  json acq;
  if (const auto* f = std::get_if<PsfFile>(&a.psf)) {
    acq["psf"] = {{"file", f->path.string()}};
  } else {
    const auto& g = std::get<GaussianPsf>(a.psf);
    acq["psf"] = {{"gaussian", {{"sigma_xy", g.sigma_xy}, {"sigma_z", g.sigma_z}}}};
  }
  acq["dark_offset"] = a.dark_offset;
  if (a.dark_image) acq["dark_image"] = a.dark_image->string();
  acq["sigma_agn"] = a.sigma_agn;
  acq["shot_noise"] = a.shot_noise;
  acq["attenuation"] = to_string(a.attenuation);
  acq["multiview"] = a.multiview;
  acq["bits"] = a.bits;
  j["acquisition"] = acq;

  if (const auto* v = std::get_if<VideoDirectory>(&cfg.videos)) {
    j["videos"] = {{"directory", v->path.string()}};
  } else {
    const auto& g = std::get<VideoGenerator>(cfg.videos);
    j["videos"] = {{"generator",
                    {{"count", g.count},
                     {"frames", g.spec.frames},
                     {"base_radius", g.spec.base_radius},
                     {"intensity", g.spec.intensity}}}};
  }
  if (cfg.frames) j["frames"] = {cfg.frames->first, cfg.frames->last};
  return j;
}

FrameRange parse_frame_range(const std::string& s) {
  const auto dots = s.find("..");
  std::int64_t a = 0, b = 0;
  if (dots == std::string::npos || !text::parse_int(std::string_view(s).substr(0, dots), a) ||
      !text::parse_int(std::string_view(s).substr(dots + 2), b) || a < 0 || b < a) {
    throw ValidationError("frame range '" + s + "' must look like a..b with 0 <= a <= b");
  }
  return {static_cast<int>(a), static_cast<int>(b)};
}

}  // namespace embryosim
