// Writes a seeded synthetic feature CSV with two latent groups.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "langprofile/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic two-blob feature CSV"};
  std::size_t rows = 1163;
  std::uint64_t seed = 7;
  std::string output;
  app.add_option("-n,--rows", rows, "Number of rows")->capture_default_str();
  app.add_option("-s,--seed", seed, "Random seed")->capture_default_str();
  app.add_option("-o,--output", output, "CSV to write")->required();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  std::ofstream out(output, std::ios::binary | std::ios::trunc);
  if (!out) {
    std::cerr << "error: cannot write " << output << "\n";
    return 2;
  }
  out << langprofile::write_feature_csv(langprofile::make_blob_table(rows, seed));
  return 0;
}
