#include "pointfoot/cli/app.hpp"

int main(int argc, char** argv) { return pointfoot::cli::run_cli(argc, argv); }
