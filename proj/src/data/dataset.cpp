#include "ugan/data/dataset.hpp"

#include <bit>
#include <cstring>
#include <sstream>

namespace ugan {

static_assert(std::endian::native == std::endian::little, "payload I/O assumes a little-endian host");

std::uint64_t Fnv1a(void const *data, std::size_t n, std::uint64_t h)
{
  auto const *p = static_cast<unsigned char const *>(data);
  for (std::size_t i = 0; i < n; i++) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

template <typename T>
void Round32(Array<T> &a)
{
  if constexpr (std::is_same_v<T, Cx>) {
    for (auto &v : a.vec()) {
      v = Cx(static_cast<float>(v.real()), static_cast<float>(v.imag()));
    }
  } else {
    for (auto &v : a.vec()) {
      v = static_cast<float>(v);
    }
  }
}

void Put(std::vector<float> &out, Tensor const &t)
{
  for (auto v : t.vec()) {
    out.push_back(static_cast<float>(v));
  }
}

void Put(std::vector<float> &out, CTensor const &t)
{
  for (auto v : t.vec()) {
    out.push_back(static_cast<float>(v.real()));
    out.push_back(static_cast<float>(v.imag()));
  }
}

Tensor TakeReal(float const *&p, Shape s)
{
  Tensor t(std::move(s));
  for (auto &v : t.vec()) {
    v = *p++;
  }
  return t;
}

CTensor TakeCx(float const *&p, Shape s)
{
  CTensor t(std::move(s));
  for (auto &v : t.vec()) {
    v = Cx(p[0], p[1]);
    p += 2;
  }
  return t;
}

std::uint64_t RecordSeed(std::uint64_t master, std::string const &split, Index index)
{
  std::uint32_t const tag = split == "train" || split == "train_gt" ? 0 : split == "test" ? 1 : 2;
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32), tag,
    static_cast<std::uint32_t>(index)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

std::string RecordLine(Record const &r, std::size_t bytes)
{
  return fmt::format("record {} seed {} mask_seed {} target_r {:.17g} beta {:.17g} calib {} {} bytes {}", r.index(),
    r.seed(), r.mask().seed, r.mask().target_r, r.mask().beta, r.mask().calib_h, r.mask().calib_w, bytes);
}

} // namespace

Record::Record(Index index, std::uint64_t seed, SamplingMask mask, CTensor stored_maps, CTensor kspace, double sigma,
  std::optional<CTensor> truth, std::string split)
  : index_(index)
  , seed_(seed)
  , mask_(std::move(mask))
  , stored_maps_(std::move(stored_maps))
  , kspace_(std::move(kspace))
  , sigma_(sigma)
  , truth_(std::move(truth))
  , split_(std::move(split))
{
  CTensor s = stored_maps_;
  NormalizeMaps(s);
  maps_ = CoilMaps{std::move(s), {}};
}

CTensor const &Record::truth() const
{
  if (!truth_) {
    throw Error("record {} of split '{}' carries no ground truth", index_, split_);
  }
  return *truth_;
}

bool Record::operator==(Record const &o) const
{
  return index_ == o.index_ && seed_ == o.seed_ && mask_.bits == o.mask_.bits && mask_.target_r == o.mask_.target_r &&
         mask_.seed == o.mask_.seed && mask_.beta == o.mask_.beta && stored_maps_ == o.stored_maps_ && kspace_ == o.kspace_ && sigma_ == o.sigma_ &&
         truth_ == o.truth_ && split_ == o.split_;
}

std::vector<Index> Dataset::order(std::uint64_t shuffle_seed) const
{
  std::vector<Index> idx(records.size());
  std::iota(idx.begin(), idx.end(), Index{0});
  Rng rng(shuffle_seed);
  for (std::size_t i = idx.size(); i > 1; i--) {
    std::swap(idx[i - 1], idx[std::uniform_int_distribution<std::size_t>(0, i - 1)(rng)]);
  }
  return idx;
}

Record MakeRecord(PhantomSpec const &spec, std::string const &split, Index index, bool keep_truth)
{
  spec.validate();
  auto const seed = RecordSeed(spec.seed, split, index);
  Rng rng(seed);
  CTensor x = MakePhantom(rng, spec);
  Round32(x);
  CTensor stored = MakeCoilmaps(rng, spec.coils, spec.h, spec.w).s;
  Round32(stored);
  CTensor s = stored;
  NormalizeMaps(s);
  SamplingMask mask = spec.masks().draw(rng);
  ImagingModel const model(mask, CoilMaps{std::move(s), {}}, spec.noise_sigma);
  CTensor y = ForwardOp(x, model);
  if (spec.noise_sigma > 0) {
    y = AddNoise(y, mask, spec.noise_sigma, rng);
  }
  Round32(y);
  std::optional<CTensor> truth;
  if (keep_truth) {
    truth = std::move(x);
  }
  return Record(index, seed, std::move(mask), std::move(stored), std::move(y), spec.noise_sigma, std::move(truth), split);
}

Dataset MakeSplit(PhantomSpec const &spec, std::string const &split)
{
  spec.validate();
  if (split != "train" && split != "train_gt" && split != "test") {
    throw Error("unknown split '{}' (train, train_gt, test)", split);
  }
  Dataset d{.split = split,
    .has_truth = split != "train",
    .h = spec.h,
    .w = spec.w,
    .coils = spec.coils,
    .noise_sigma = spec.noise_sigma,
    .master_seed = spec.seed,
    .records = {}};
  Index const n = split == "test" ? spec.n_test : spec.n_train;
  d.records.resize(static_cast<std::size_t>(n));
  std::vector<std::string> errors(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic)
  for (Index i = 0; i < n; i++) {
    try {
      d.records[i] = MakeRecord(spec, split, i, d.has_truth);
    } catch (std::exception const &e) {
      errors[i] = e.what();
    }
  }
  for (Index i = 0; i < n; i++) {
    if (!errors[i].empty()) {
      throw Error("generating {} record {}: {}", split, i, errors[i]);
    }
  }
  return d;
}

void SaveDataset(Dataset const &d, std::filesystem::path const &file)
{
  std::ofstream os(file, std::ios::binary);
  if (!os) {
    throw Error("cannot open {} for writing", file.string());
  }
  os << "ugan-dataset 1\n"
     << "split " << d.split << "\n"
     << "truth " << (d.has_truth ? 1 : 0) << "\n"
     << "records " << d.records.size() << "\n"
     << "h " << d.h << "\nw " << d.w << "\ncoils " << d.coils << "\n"
     << fmt::format("sigma {:.17g}\n", d.noise_sigma) << "master_seed " << d.master_seed << "\n"
     << "end\n";
  for (auto const &r : d.records) {
    if (r.has_truth() != d.has_truth) {
      throw Error("record {} ground-truth presence disagrees with split '{}'", r.index(), d.split);
    }
    std::vector<float> payload;
    Put(payload, r.mask().bits);
    Put(payload, r.kspace());
    Put(payload, r.stored_maps());
    if (r.has_truth()) {
      Put(payload, r.truth());
    }
    std::size_t const bytes = payload.size() * sizeof(float);
    auto const line = RecordLine(r, bytes);
    auto const sum = Fnv1a(payload.data(), bytes, Fnv1a(line.data(), line.size()));
    os << line << fmt::format(" fnv {:016x}\n", sum);
    os.write(reinterpret_cast<char const *>(payload.data()), static_cast<std::streamsize>(bytes));
  }
  if (!os) {
    throw Error("failed writing {}", file.string());
  }
}

DatasetReader::DatasetReader(std::filesystem::path const &file)
  : is_(file, std::ios::binary)
  , path_(file)
{
  if (!is_) {
    throw Error("cannot open dataset {}", file.string());
  }
  std::string line;
  if (!std::getline(is_, line) || line != "ugan-dataset 1") {
    throw Error("{} is not a dataset container", file.string());
  }
  bool seen_end = false;
  while (std::getline(is_, line)) {
    if (line == "end") {
      seen_end = true;
      break;
    }
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    bool ok = true;
    if (key == "split") {
      ok = static_cast<bool>(ls >> header_.split);
    } else if (key == "truth") {
      int t = 0;
      ok = static_cast<bool>(ls >> t);
      header_.has_truth = t != 0;
    } else if (key == "records") {
      ok = static_cast<bool>(ls >> n_);
    } else if (key == "h") {
      ok = static_cast<bool>(ls >> header_.h);
    } else if (key == "w") {
      ok = static_cast<bool>(ls >> header_.w);
    } else if (key == "coils") {
      ok = static_cast<bool>(ls >> header_.coils);
    } else if (key == "sigma") {
      ok = static_cast<bool>(ls >> header_.noise_sigma);
    } else if (key == "master_seed") {
      ok = static_cast<bool>(ls >> header_.master_seed);
    } else {
      throw Error("{}: unknown header field '{}'", file.string(), key);
    }
    if (!ok) {
      throw Error("{}: malformed header line '{}'", file.string(), line);
    }
  }
  if (!seen_end || header_.h < 1 || header_.w < 1 || header_.coils < 1 || n_ < 0) {
    throw Error("{}: incomplete dataset header", file.string());
  }
}

std::optional<Record> DatasetReader::next()
{
  if (read_ == n_) {
    return std::nullopt;
  }
  Index const i = read_;
  std::string line;
  if (!std::getline(is_, line)) {
    throw Error("{}: record {} missing (file truncated)", path_.string(), i);
  }
  auto const at = line.rfind(" fnv ");
  if (at == std::string::npos) {
    throw Error("{}: record {} header corrupt", path_.string(), i);
  }
  std::string const body = line.substr(0, at);
  std::uint64_t sum = 0;
  {
    std::istringstream hs(line.substr(at + 5));
    if (!(hs >> std::hex >> sum)) {
      throw Error("{}: record {} checksum unreadable", path_.string(), i);
    }
  }
  std::istringstream ls(body);
  std::string k_rec, k_seed, k_mseed, k_r, k_beta, k_calib, k_bytes;
  Index idx = -1, ch = 0, cw = 0;
  std::uint64_t seed = 0, mask_seed = 0;
  double target_r = 0, beta = 0;
  std::size_t bytes = 0;
  if (!(ls >> k_rec >> idx >> k_seed >> seed >> k_mseed >> mask_seed >> k_r >> target_r >> k_beta >> beta >> k_calib >> ch >> cw >> k_bytes >> bytes) ||
      k_rec != "record" || idx != i || k_bytes != "bytes") {
    throw Error("{}: record {} header corrupt: '{}'", path_.string(), i, line);
  }
  Index const H = header_.h, W = header_.w, C = header_.coils;
  std::size_t const expect = static_cast<std::size_t>(H * W + 4 * C * H * W + (header_.has_truth ? 2 * H * W : 0)) * sizeof(float);
  if (bytes != expect) {
    throw Error("{}: record {} declares {} bytes, layout needs {}", path_.string(), i, bytes, expect);
  }
  std::vector<float> payload(bytes / sizeof(float));
  is_.read(reinterpret_cast<char *>(payload.data()), static_cast<std::streamsize>(bytes));
  if (static_cast<std::size_t>(is_.gcount()) != bytes) {
    throw Error("{}: record {} payload truncated ({} of {} bytes)", path_.string(), i, is_.gcount(), bytes);
  }
  if (Fnv1a(payload.data(), bytes, Fnv1a(body.data(), body.size())) != sum) {
    throw Error("{}: record {} fails its checksum", path_.string(), i);
  }
  float const *p = payload.data();
  SamplingMask mask{.bits = TakeReal(p, {H, W}), .target_r = target_r, .calib_h = ch, .calib_w = cw, .seed = mask_seed, .beta = beta};
  CTensor k = TakeCx(p, {C, H, W});
  CTensor s = TakeCx(p, {C, H, W});
  std::optional<CTensor> truth;
  if (header_.has_truth) {
    truth = TakeCx(p, {H, W});
  }
  read_++;
  Record r(idx, seed, std::move(mask), std::move(s), std::move(k), header_.noise_sigma, std::move(truth),
    header_.split);
  return r;
}

Dataset LoadDataset(std::filesystem::path const &file)
{
  DatasetReader reader(file);
  Dataset d = reader.header();
  while (auto r = reader.next()) {
    d.records.push_back(std::move(*r));
  }
  return d;
}

std::string BuildDataset(PhantomSpec const &spec, std::filesystem::path const &dir)
{
  spec.validate();
  std::filesystem::create_directories(dir);
  std::ostringstream man;
  man << "ugan-manifest 1\n";
  man << fmt::format("spec h={} w={} coils={} ellipses={}-{} phase_order={} sigma={:.17g} r={:.17g}-{:.17g} calib={}x{} "
                     "levels={} master_seed={}\n",
    spec.h, spec.w, spec.coils, spec.min_ellipses, spec.max_ellipses, spec.phase_order, spec.noise_sigma, spec.r_min,
    spec.r_max, spec.calib_h, spec.calib_w, spec.wavelet_levels, spec.seed);
  for (std::string split : {"train", "train_gt", "test"}) {
    auto const d = MakeSplit(spec, split);
    auto const file = dir / (split + ".ugd");
    SaveDataset(d, file);
    man << fmt::format("split {} file {} records {} truth {}\n", split, file.filename().string(), d.records.size(),
      d.has_truth ? 1 : 0);
    for (auto const &r : d.records) {
      man << fmt::format("  {} {} seed {} R {:.4f}\n", split, r.index(), r.seed(), r.mask().acceleration());
    }
  }
  auto const text = man.str();
  auto const sum = fmt::format("{:016x}", Fnv1a(text.data(), text.size()));
  std::ofstream os(dir / "manifest.txt");
  os << text << "checksum " << sum << "\n";
  if (!os) {
    throw Error("failed writing manifest in {}", dir.string());
  }
  return sum;
}

} // namespace ugan
