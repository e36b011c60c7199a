#include "cli_app.hpp"

int main(int argc, char** argv) { return relaysel::cli::run(argc, argv); }
