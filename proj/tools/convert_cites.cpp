// Converts a citation network distributed as <name>.cites / <name>.content
// into the edges.txt / attrs.csv / labels.txt layout read by `tascom`.
#include <iostream>

#include <CLI11.hpp>

#include "tascom/cli.hpp"
#include "tascom/data_io.hpp"
#include "tascom/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Convert a cites/content citation dataset"};
  app.name("tascom-convert");
  std::string cites, content, out;
  app.add_option("--cites", cites, "Citation list, 'cited citing' per line")->required()->check(CLI::ExistingFile);
  app.add_option("--content", content, "Rows of 'id features... label'")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out, "Output directory")->required();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? tascom::kExitOk : tascom::kExitUsage;
  }
  try {
    tascom::convert_cites_content(cites, content, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return tascom::kExitData;
  }
  return tascom::kExitOk;
}
