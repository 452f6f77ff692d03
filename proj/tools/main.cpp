#include "dofprior/app.hpp"

int main(int argc, char** argv) { return dofprior::run_cli(argc, argv); }
