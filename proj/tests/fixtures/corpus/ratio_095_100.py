# note 0 on the value
value_0 = 0
value_1 = 1
# note 1 on the value
value_2 = 2
# note 2 on the value
value_3 = 3
# note 3 on the value
value_4 = 4
# note 4 on the value
value_5 = 5
# note 5 on the value
value_6 = 6
# note 6 on the value
value_7 = 7
# note 7 on the value
value_8 = 8
# note 8 on the value
value_9 = 9
# note 9 on the value
value_10 = 10
# note 10 on the value
value_11 = 11
# note 11 on the value
value_12 = 12
# note 12 on the value
value_13 = 13
# note 13 on the value
value_14 = 14
# note 14 on the value
value_15 = 15
# note 15 on the value
value_16 = 16
# note 16 on the value
value_17 = 17
# note 17 on the value
value_18 = 18
# note 18 on the value
value_19 = 19
# note 19 on the value
value_20 = 20
value_21 = 21
# note 20 on the value
value_22 = 22
# note 21 on the value
value_23 = 23
# note 22 on the value
value_24 = 24
# note 23 on the value
value_25 = 25
# note 24 on the value
value_26 = 26
# note 25 on the value
value_27 = 27
# note 26 on the value
value_28 = 28
# note 27 on the value
value_29 = 29
# note 28 on the value
value_30 = 30
# note 29 on the value
value_31 = 31
# note 30 on the value
value_32 = 32
# note 31 on the value
value_33 = 33
# note 32 on the value
value_34 = 34
# note 33 on the value
value_35 = 35
# note 34 on the value
value_36 = 36
# note 35 on the value
value_37 = 37
# note 36 on the value
value_38 = 38
# note 37 on the value
value_39 = 39
# note 38 on the value
value_40 = 40
value_41 = 41
# note 39 on the value
value_42 = 42
# note 40 on the value
value_43 = 43
# note 41 on the value
value_44 = 44
# note 42 on the value
value_45 = 45
# note 43 on the value
value_46 = 46
# note 44 on the value
value_47 = 47
# note 45 on the value
value_48 = 48
# note 46 on the value
value_49 = 49
# note 47 on the value
value_50 = 50
# note 48 on the value
value_51 = 51
# note 49 on the value
value_52 = 52
# note 50 on the value
value_53 = 53
# note 51 on the value
value_54 = 54
# note 52 on the value
value_55 = 55
# note 53 on the value
value_56 = 56
# note 54 on the value
value_57 = 57
# note 55 on the value
value_58 = 58
# note 56 on the value
value_59 = 59
# note 57 on the value
value_60 = 60
value_61 = 61
# note 58 on the value
value_62 = 62
# note 59 on the value
value_63 = 63
# note 60 on the value
value_64 = 64
# note 61 on the value
value_65 = 65
# note 62 on the value
value_66 = 66
# note 63 on the value
value_67 = 67
# note 64 on the value
value_68 = 68
# note 65 on the value
value_69 = 69
# note 66 on the value
value_70 = 70
# note 67 on the value
value_71 = 71
# note 68 on the value
value_72 = 72
# note 69 on the value
value_73 = 73
# note 70 on the value
value_74 = 74
# note 71 on the value
value_75 = 75
# note 72 on the value
value_76 = 76
# note 73 on the value
value_77 = 77
# note 74 on the value
value_78 = 78
# note 75 on the value
value_79 = 79
# note 76 on the value
value_80 = 80
value_81 = 81
# note 77 on the value
value_82 = 82
# note 78 on the value
value_83 = 83
# note 79 on the value
value_84 = 84
# note 80 on the value
value_85 = 85
# note 81 on the value
value_86 = 86
# note 82 on the value
value_87 = 87
# note 83 on the value
value_88 = 88
# note 84 on the value
value_89 = 89
# note 85 on the value
value_90 = 90
# note 86 on the value
value_91 = 91
# note 87 on the value
value_92 = 92
# note 88 on the value
value_93 = 93
# note 89 on the value
value_94 = 94
# note 90 on the value
value_95 = 95
# note 91 on the value
value_96 = 96
# note 92 on the value
value_97 = 97
# note 93 on the value
value_98 = 98
# note 94 on the value
value_99 = 99
