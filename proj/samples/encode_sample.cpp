// Fits a mixture to synthetic descriptors and encodes one image as FV and
// SFV. Pass an .fvd descriptor file to encode that instead.
//
//   encode_sample [descriptors.fvd]

#include <chrono>
#include <cstdio>
#include <exception>

#include "sfv/encode/fisher.hpp"
#include "sfv/io/descriptor_file.hpp"
#include "sfv/model/em.hpp"
#include "sfv/synth/datasets.hpp"

int main(int argc, char** argv) try {
  const auto truth = sfv::synth::random_mixture(32, 16, 1);
  sfv::Rng rng(2);
  const auto image = argc > 1 ? sfv::io::read_descriptors(argv[1]) : sfv::synth::sample_mixture(truth, 2000, rng);

  sfv::EmConfig cfg;
  cfg.seed = 3;
  const auto fit = sfv::em_fit(image, 32, cfg);
  std::printf("EM: %zu iterations, mean log-likelihood %.4f\n", fit.log.iterations, fit.log.final_log_likelihood());

  using clock = std::chrono::steady_clock;
  auto t0 = clock::now();
  const auto fv = sfv::fv_encode(fit.gmm, image);
  auto t1 = clock::now();
  const auto sparse = sfv::sfv_encode(fit.gmm, image, 5);
  auto t2 = clock::now();

  double dot = 0.0;
  for (std::size_t i = 0; i < fv.size(); ++i) dot += fv.values()[i] * sparse.values()[i];
  std::printf("N=%zu D=%zu M=%zu, code length %zu\n", image.size(), image.dim(), fit.gmm.components(), fv.size());
  std::printf("FV  %.3f ms\n", std::chrono::duration<double, std::milli>(t1 - t0).count());
  std::printf("SFV %.3f ms (k=5)\n", std::chrono::duration<double, std::milli>(t2 - t1).count());
  std::printf("cosine(FV, SFV) = %.6f\n", dot);
  return 0;
} catch (const std::exception& e) {
  std::fprintf(stderr, "error: %s\n", e.what());
  return 1;
}
