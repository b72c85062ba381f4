#include "prospect_drive/cli.hpp"

int main(int argc, char ** argv) { return prospect_drive::run_cli(argc, argv); }
