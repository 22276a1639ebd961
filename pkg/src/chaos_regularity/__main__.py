from chaos_regularity.cli import console_main

console_main()
