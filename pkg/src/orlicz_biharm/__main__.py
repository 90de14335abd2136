from orlicz_biharm.cli import main

main()
