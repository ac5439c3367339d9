if (n := 10) > 5:
    print(f'{n!r:>4}')
