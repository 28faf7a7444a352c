from multigraph_moments.cli import main

main()
