#include "cli_app.hpp"

int main(int argc, char** argv) { return trf::cli::run(argc, argv); }
