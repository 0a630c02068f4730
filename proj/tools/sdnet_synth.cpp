// Generates the synthetic blob dataset used by the demo in the README and by
// the test suite: class P carries bright elliptical blobs, class N only the
// background texture. Severity follows blob amplitude.
#include <CLI11.hpp>

#include <iostream>

#include "sdnet/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Synthetic two-class chest-image stand-in generator"};

  std::string out_dir;
  sdnet::SyntheticSpec spec;
  app.add_option("--out", out_dir, "Output directory")->required();
  app.add_option("--positives", spec.n_positive, "Positive records");
  app.add_option("--negatives", spec.n_negative, "Negative records");
  app.add_option("--side", spec.side, "Image side in pixels");
  app.add_option("--seed", spec.seed, "Generator seed");
  app.add_option("--normal-pcr-fraction", spec.normal_pcr_fraction,
                 "Fraction of positives labeled Normal-PCR+ (blob-free)");

  CLI11_PARSE(app, argc, argv);

  try {
    const auto manifest = sdnet::make_blob_dataset(out_dir, spec);
    std::cout << "wrote " << manifest.n() << " images + manifest.csv under " << out_dir
              << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
