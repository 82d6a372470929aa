#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tactile/patch.hpp"

namespace tactile {

// Pluggable scorer between tactile prints. Scores live in (0, 1]; higher
// means more compatible. score_hp compares a hole print against a peg print
// (mating pairs score highest); score_pp compares two peg prints and is
// symmetric.
class SimilarityModel {
 public:
  virtual ~SimilarityModel() = default;
  virtual double score_hp(const ContactPatch& hole, const ContactPatch& peg) const = 0;
  virtual double score_pp(const ContactPatch& a, const ContactPatch& b) const = 0;
  virtual std::string name() const = 0;
};

// Geometry-backed stand-in for a trained embedding: scores are sharpened
// pixel agreement, with the hole side compared against the peg complement so
// an exactly mating pair scores 1. The default exponent is high on purpose:
// a contrastive model at low temperature separates near-matches from the
// rest by orders of magnitude, and the filter's initialization needs that
// concentration to place particles on the true hypothesis at K=100.
class GeometricOracle final : public SimilarityModel {
 public:
  explicit GeometricOracle(double epsilon = 1e-6, double sharpness = 128.0);
  double score_hp(const ContactPatch& hole, const ContactPatch& peg) const override;
  double score_pp(const ContactPatch& a, const ContactPatch& b) const override;
  std::string name() const override { return "geometric-oracle"; }
  double epsilon() const { return epsilon_; }
  double sharpness() const { return sharpness_; }

 private:
  double sharpen(double agreement) const;
  double epsilon_;
  double sharpness_;
  int int_exponent_;  // >0 when sharpness is integral (exponentiation by squaring)
};

// Similarity of two unit-norm embeddings under temperature tau, in (0, 1]:
// exp((q . k - 1) / tau).
double embed_score(std::span<const float> q, std::span<const float> k, double tau);

// Contrastive loss for one positive key and a batch of negatives:
// -log( exp(q.k+ / tau) / (exp(q.k+ / tau) + sum_i exp(q.k-_i / tau)) ).
double info_nce_loss(std::span<const float> q, std::span<const float> k_pos,
                     const std::vector<std::vector<float>>& k_neg, double tau);

// Imported embedding vectors keyed by bank entry order. File layout: one JSON
// header line {"dimension":D,"tau":T,"count":N} followed by N*D little-endian
// f32 values.
struct EmbeddingTable {
  int dimension = 0;
  double tau = 1.0;
  std::vector<std::vector<float>> vectors;

  void validate(std::optional<size_t> bank_entries = std::nullopt) const;
};

void save_embedding_table(const std::string& path, const EmbeddingTable& table);
EmbeddingTable load_embedding_table(const std::string& path,
                                    std::optional<size_t> bank_entries = std::nullopt);

}  // namespace tactile
