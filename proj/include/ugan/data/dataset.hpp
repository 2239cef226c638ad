#pragma once

#include "phantom.hpp"

#include <filesystem>
#include <fstream>
#include <optional>

namespace ugan {

// One acquisition. Payloads are held at float32 precision so that a record survives a
// save/load cycle bit for bit.
class Record
{
public:
  Record() = default;
  // stored_maps are the float32 sensitivities as written; maps() is their pixelwise normalisation
  Record(Index index, std::uint64_t seed, SamplingMask mask, CTensor stored_maps, CTensor kspace, double sigma,
    std::optional<CTensor> truth, std::string split);

  Index index() const { return index_; }
  std::uint64_t seed() const { return seed_; }
  std::string const &split() const { return split_; }
  SamplingMask const &mask() const { return mask_; }
  CoilMaps const &maps() const { return maps_; }
  CTensor const &stored_maps() const { return stored_maps_; }
  CTensor const &kspace() const { return kspace_; } // [C, H, W]
  double noise_sigma() const { return sigma_; }
  ImagingModel model() const { return ImagingModel(mask_, maps_, sigma_); }

  bool has_truth() const { return truth_.has_value(); }
  // Throws on records of a split that carries no ground truth
  CTensor const &truth() const;

  bool operator==(Record const &) const;

private:
  Index index_ = 0;
  std::uint64_t seed_ = 0;
  SamplingMask mask_;
  CTensor stored_maps_;
  CoilMaps maps_;
  CTensor kspace_;
  double sigma_ = 0;
  std::optional<CTensor> truth_;
  std::string split_;
};

struct Dataset
{
  std::string split;
  bool has_truth = false;
  Index h = 0, w = 0, coils = 0;
  double noise_sigma = 0;
  std::uint64_t master_seed = 0;
  std::vector<Record> records;

  // Visit order for an epoch: a permutation of record indices fixed by seed
  std::vector<Index> order(std::uint64_t shuffle_seed) const;
};

// Generate one record: phantom, coil maps, fully sampled k-space, mask draw, subsample, noise.
Record MakeRecord(PhantomSpec const &spec, std::string const &split, Index index, bool keep_truth);
// Both splits, in memory. Record generation is parallel over indices with per-record seeds.
Dataset MakeSplit(PhantomSpec const &spec, std::string const &split);

// Container:
//   ugan-dataset 1
//   split <name> / truth <0|1> / records <n> / h / w / coils / sigma / master_seed
//   end
// then per record a line
//   record <i> seed <s> mask_seed <m> target_r <r> beta <b> calib <ch> <cw> bytes <n> fnv <hex>
// followed by n bytes of little-endian float32: mask [H,W], k-space [C,H,W,2], maps [C,H,W,2],
// truth [H,W,2] when present. The checksum covers the record line up to "fnv" and the payload.
void SaveDataset(Dataset const &d, std::filesystem::path const &file);

class DatasetReader
{
public:
  explicit DatasetReader(std::filesystem::path const &file);
  Dataset const &header() const { return header_; } // records left empty
  Index size() const { return n_; }
  // Next record, or nullopt at the end. Corruption throws naming the record index.
  std::optional<Record> next();

private:
  std::ifstream is_;
  std::filesystem::path path_;
  Dataset header_;
  Index n_ = 0, read_ = 0;
};

Dataset LoadDataset(std::filesystem::path const &file);

// Writes train.ugd (no ground truth), train_gt.ugd (the same acquisitions with ground truth, for
// supervised training), test.ugd (with ground truth) and a manifest into dir.
// Returns the manifest checksum.
std::string BuildDataset(PhantomSpec const &spec, std::filesystem::path const &dir);

std::uint64_t Fnv1a(void const *data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL);

} // namespace ugan
