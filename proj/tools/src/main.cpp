#include "hymem_cli/app.hpp"

int main(int argc, char** argv) { return hymem::cli::run_cli(argc, argv); }
